"""Command line interface.

Exit codes: 0 all checks pass, 1 a check failed, 2 configuration error.
"""

import argparse
import json
import sys

from . import harness, profiles
from .core import ConfigError, InitialDataError, OHSolverError, validate_initial_data


def _emit(args, payload, text_lines):
    if args.json:
        print(json.dumps(payload, sort_keys=True))
    elif not args.quiet:
        for line in text_lines:
            print(line)


def _cmd_run(args):
    plan = harness.parse_config(args.config)
    if plan.sweep_axis is None:
        _, _, checks, out = harness.run_single(plan)
        ok = all(c.passed for c in checks)
        lines = [
            f"{'PASS' if c.passed else 'FAIL'} {c.name}: measured {c.measured:.3e} "
            f"(tolerance {c.tolerance:.3e})"
            for c in checks
        ]
        lines.append(f"artifacts: {out}")
        _emit(args, {"ok": ok, "checks": [c.name for c in checks if not c.passed]}, lines)
        return 0 if ok else 1
    out = harness.run_experiment(plan)
    status = json.loads((out / "status.json").read_text())
    _emit(args, status, [f"sweep {'passed' if status['ok'] else 'failed'}: {out}"])
    return 0 if status["ok"] else 1


def _cmd_convergence(args):
    plan = harness.parse_config(args.config)
    if plan.sweep_axis is None:
        raise ConfigError("convergence requires a sweep in the config")
    out = harness.run_experiment(plan)
    summary = json.loads((out / "convergence.json").read_text())
    lines = [
        f"axis {summary['axis']}: L1 differences {summary['l1_differences']}",
        f"ratios {summary['ratios']}",
        f"{'PASS' if summary['passed'] else 'FAIL'} convergence",
    ]
    _emit(args, summary, lines)
    return 0 if summary["passed"] else 1


def _cmd_adjoint_check(args):
    plan = harness.parse_config(args.config)
    results = harness.adjoint_check(plan)
    ok = all(r.passed for r in results)
    if plan.adjoint_compare == "self":
        ok = ok and all(r.direct == 0.0 for r in results)
    lines = [
        f"psi[{i}]: direct {r.direct:.6e}, ledger {r.ledger_sum:.6e}, "
        f"{'PASS' if r.passed else 'FAIL'}"
        for i, r in enumerate(results)
    ]
    payload = {
        "ok": ok,
        "residuals": [r.direct for r in results],
        "ledgers": [r.ledger_sum for r in results],
    }
    _emit(args, payload, lines)
    return 0 if ok else 1


def _cmd_validate_ic(args):
    plan = harness.parse_config(args.config)
    grid = plan.grid()
    u0 = profiles.build(grid, plan.initial_data)
    try:
        init = validate_initial_data(
            u0, plan.config, relax_mass=plan.relax_mass,
            profile=plan.initial_data.get("profile", "custom"),
        )
    except InitialDataError as err:
        _emit(
            args,
            {"ok": False, "mass": err.mass, "p_mass": err.p_mass},
            [f"REJECTED: {err}"],
        )
        return 1
    prov = init.provenance
    lines = [
        f"integral of u0: {prov['mass']:.6e}",
        f"integral of P0: {prov['p_mass']:.6e}",
        f"L2 norm of P0:  {prov['l2_P0']:.6e}",
        "accepted" + (" (relaxed)" if prov["relaxed"] else ""),
    ]
    _emit(args, {"ok": True, **{k: prov[k] for k in ("mass", "p_mass", "l2_P0")}}, lines)
    return 0


def _cmd_riemann(args):
    if args.left == args.right:
        raise ConfigError("left and right states must differ")
    # the compact two-sided step never has a zero-mean primitive, so the
    # primitive constraint is always relaxed here (recorded in provenance);
    # net mass additionally requires an explicit override
    net_mass = abs(args.left + args.right) > 1e-14
    if net_mass and not args.relax_mass:
        raise ConfigError(
            "riemann data with net mass needs --relax-mass "
            f"(integral = {args.left + args.right:.3g})"
        )
    plan = harness.plan_from_dict(
        {
            "N": args.N,
            "L": args.L,
            "gamma": args.gamma,
            "t_end": args.t_end,
            "initial_data": {
                "profile": "riemann",
                "left": args.left,
                "right": args.right,
            },
            "relax_mass": True,
            "output_dir": args.output_dir,
        }
    )
    _, report, checks, out = harness.run_single(plan, subdir="riemann")
    ok = all(c.passed for c in checks)
    lines = []
    if args.left < args.right:
        lines.append(
            "note: the initial discontinuity jumps up (inadmissible); the evolved "
            "solution replaces it by a rarefaction"
        )
    events = [e for e in report.jump_events if e.classification != "admissible-down"]
    settle = plan.config.tolerances["jump_settle_frac"] * plan.config.t_end
    persistent = [e for e in events if e.t >= settle]
    lines.append(
        f"persistent up-jump events after t = {settle:g}: {len(persistent)}"
    )
    lines.extend(
        f"{'PASS' if c.passed else 'FAIL'} {c.name}: measured {c.measured:.3e}"
        for c in checks
    )
    lines.append(f"artifacts: {out}")
    _emit(args, {"ok": ok, "persistent_up_jumps": len(persistent)}, lines)
    return 0 if ok else 1


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ohsolver",
        description="Finite-volume solver and verification harness for the "
        "Ostrovsky-Hunter equation",
    )
    parser.add_argument("--quiet", action="store_true", help="suppress text output")
    parser.add_argument("--json", action="store_true", help="machine-readable output")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a config (single run or sweep)")
    p.add_argument("config")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("convergence", help="run a sweep and report convergence")
    p.add_argument("config")
    p.set_defaults(func=_cmd_convergence)

    p = sub.add_parser("adjoint-check", help="duality residual between two runs")
    p.add_argument("config")
    p.set_defaults(func=_cmd_adjoint_check)

    p = sub.add_parser("validate-ic", help="validate the configured initial data")
    p.add_argument("config")
    p.set_defaults(func=_cmd_validate_ic)

    p = sub.add_parser("riemann", help="evolve a compact two-state Riemann datum")
    p.add_argument("--left", type=float, required=True)
    p.add_argument("--right", type=float, required=True)
    p.add_argument("--relax-mass", action="store_true")
    p.add_argument("--gamma", type=float, default=0.0)
    p.add_argument("--N", type=int, default=1024)
    p.add_argument("--L", type=float, default=8.0)
    p.add_argument("--t-end", dest="t_end", type=float, default=0.5)
    p.add_argument("--output-dir", default="out")
    p.set_defaults(func=_cmd_riemann)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return 2
    except OHSolverError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

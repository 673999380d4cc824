"""Experiment orchestration, configuration, and serialization.

Config files are flat JSON (plus a nested "tolerances" object); unknown keys
are errors.  Every run leaves a self-describing artifact directory: the time
series as CSV, field snapshots, and a report.json that echoes the exact
configuration so the run is reproducible from the artifact alone.
"""

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import _kernels, adjoint, diagnostics, evolve, profiles
from .core import ConfigError, Grid1D, SolverConfig, validate_initial_data

__version__ = "0.1.0"

_PLAN_KEYS = {
    "L",
    "N",
    "gamma",
    "epsilon",
    "delta",
    "cfl",
    "t_end",
    "mode",
    "flux_scheme",
    "diffusion_scheme",
    "mean_correction",
    "tolerances",
    "initial_data",
    "sweep",
    "output_dir",
    "seed",
    "snapshot_levels",
    "relax_mass",
    "adjoint_tau",
    "adjoint_compare",
    "parallel",
}

_SWEEP_AXES = ("grid", "epsilon", "delta")


@dataclass
class ExperimentPlan:
    config: SolverConfig
    L: float = 8.0
    N: int = 512
    initial_data: dict = field(default_factory=lambda: {"profile": "hermite-bump"})
    sweep_axis: str | None = None
    sweep_values: list = field(default_factory=list)
    output_dir: str = "out"
    seed: int = 0
    snapshot_levels: int = 10
    relax_mass: bool = False
    adjoint_tau: float | None = None
    adjoint_compare: str = "schemes"
    parallel: int = 1

    def __post_init__(self):
        if self.N < 4:
            raise ConfigError("N must be at least 4")
        if self.L <= 0:
            raise ConfigError("L must be positive")
        if self.sweep_axis is not None:
            if self.sweep_axis not in _SWEEP_AXES:
                raise ConfigError(f"unknown sweep axis {self.sweep_axis!r}")
            vals = list(self.sweep_values)
            if len(vals) < 2:
                raise ConfigError("a sweep needs at least 2 values")
            diffs = np.diff(vals)
            if not (np.all(diffs > 0) or np.all(diffs < 0)):
                raise ConfigError("sweep values must be strictly monotone")
        if self.adjoint_compare not in ("schemes", "self"):
            raise ConfigError(f"unknown adjoint_compare {self.adjoint_compare!r}")

    def grid(self, n=None):
        return Grid1D(half_width=self.L, cell_count=int(n or self.N))

    def echo(self, config=None):
        cfg = config or self.config
        return {
            "L": self.L,
            "N": self.N,
            "gamma": cfg.gamma,
            "epsilon": cfg.epsilon,
            "delta": cfg.delta,
            "cfl": cfg.cfl,
            "t_end": cfg.t_end,
            "mode": cfg.mode,
            "flux_scheme": cfg.flux_scheme,
            "diffusion_scheme": cfg.diffusion_scheme,
            "mean_correction": cfg.mean_correction,
            "tolerances": cfg.tolerances,
            "initial_data": self.initial_data,
            "sweep": (
                {"axis": self.sweep_axis, "values": list(self.sweep_values)}
                if self.sweep_axis
                else None
            ),
            "output_dir": self.output_dir,
            "seed": self.seed,
            "snapshot_levels": self.snapshot_levels,
            "relax_mass": self.relax_mass,
            "adjoint_tau": self.adjoint_tau,
            "adjoint_compare": self.adjoint_compare,
            "parallel": self.parallel,
        }


def plan_from_dict(raw):
    unknown = set(raw) - _PLAN_KEYS
    if unknown:
        raise ConfigError(f"unknown config key {sorted(unknown)[0]!r}")
    sweep = raw.get("sweep") or {}
    if sweep and (set(sweep) - {"axis", "values"}):
        raise ConfigError("sweep accepts only 'axis' and 'values'")
    config = SolverConfig(
        gamma=float(raw.get("gamma", 1.0)),
        epsilon=float(raw.get("epsilon", 0.0)),
        delta=float(raw.get("delta", 0.0)),
        cfl=float(raw.get("cfl", 0.4)),
        t_end=float(raw.get("t_end", 1.0)),
        mode=raw.get("mode", "direct-primitive"),
        flux_scheme=raw.get("flux_scheme", "godunov"),
        diffusion_scheme=raw.get("diffusion_scheme", "explicit"),
        mean_correction=bool(raw.get("mean_correction", True)),
        tolerances=raw.get("tolerances", {}),
    )
    return ExperimentPlan(
        config=config,
        L=float(raw.get("L", 8.0)),
        N=int(raw.get("N", 512)),
        initial_data=raw.get("initial_data", {"profile": "hermite-bump"}),
        sweep_axis=sweep.get("axis"),
        sweep_values=sweep.get("values", []),
        output_dir=raw.get("output_dir", "out"),
        seed=int(raw.get("seed", 0)),
        snapshot_levels=int(raw.get("snapshot_levels", 10)),
        relax_mass=bool(raw.get("relax_mass", False)),
        adjoint_tau=raw.get("adjoint_tau"),
        adjoint_compare=raw.get("adjoint_compare", "schemes"),
        parallel=int(raw.get("parallel", 1)),
    )


def parse_config(path):
    """Load and validate a JSON experiment plan."""
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as err:
        raise ConfigError(f"malformed JSON in {path}: {err}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    return plan_from_dict(raw)


def _fmt(x):
    return f"{float(x):.17g}"


def _write_series_csv(path, report):
    cols = diagnostics.DiagnosticsReport.SERIES_COLUMNS
    rows = report.series_rows()
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(cols) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _write_snapshot_csv(path, x, u, P):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("x,u,P\n")
        for xi, ui, pi in zip(x, u, P):
            fh.write(f"{_fmt(xi)},{_fmt(ui)},{_fmt(pi)}\n")


def _write_json(path, payload):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _versions():
    return {
        "ohsolver": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "kernel_backend": _kernels.backend(),
    }


def _build_initial(plan, grid):
    u0 = profiles.build(grid, plan.initial_data)
    profile = plan.initial_data.get("profile", "custom")
    return validate_initial_data(
        u0, plan.config, relax_mass=plan.relax_mass, profile=profile
    )


def run_single(plan, config=None, n=None, subdir="run"):
    """One forward run; writes its artifact directory and returns the results."""
    config = config or plan.config
    grid = plan.grid(n)
    init = _build_initial(plan, grid)
    snapshot_times = evolve.geometric_snapshot_times(
        config.t_end, plan.snapshot_levels
    )
    final, report = evolve.run_to_time(init, config, model_for(plan), snapshot_times=snapshot_times)
    checks = diagnostics.evaluate_report(report, config, model_for(plan))

    out = Path(plan.output_dir) / subdir
    out.mkdir(parents=True, exist_ok=True)
    _write_series_csv(out / "series.csv", report)
    for t, u, P in report.snapshots:
        _write_snapshot_csv(out / f"snapshot_t{t:.6f}.csv", grid.centers, u, P)
    _write_json(
        out / "report.json",
        {
            "config": {**plan.echo(config=config), "N": grid.cell_count},
            "tolerances_resolved": config.resolved_tolerances(grid),
            "fitted": {
                "oleinik_C": report.oleinik_C,
                "stability_C": report.stability_C,
            },
            "checks": [
                {
                    "name": c.name,
                    "passed": c.passed,
                    "measured": c.measured,
                    "tolerance": c.tolerance,
                    "statement": c.statement,
                }
                for c in checks
            ],
            "aborted": report.aborted,
            "versions": _versions(),
        },
    )
    return final, report, checks, out


def model_for(plan):
    """Flux model used by the harness; the state range covers the data."""
    from .core import FluxModel

    return FluxModel.burgers()


def _restrict(fine, factor):
    """Average consecutive blocks; exact for nested cell-centered grids."""
    return fine.reshape(-1, factor).mean(axis=1)


def _l1(values, dx):
    return float(np.sum(np.abs(values)) * dx)


def run_experiment(plan):
    """Run the plan (single run or sweep) and write all artifacts.

    Sweeps produce one subdirectory per value plus a top-level
    convergence.json with L1 differences between successive levels and
    fitted orders.  Returns the output directory path.
    """
    out_root = Path(plan.output_dir)
    out_root.mkdir(parents=True, exist_ok=True)
    status = {"ok": False, "runs": []}

    try:
        if plan.sweep_axis is None:
            _, report, checks, _ = run_single(plan, subdir="run")
            status["runs"].append(
                {"subdir": "run", "passed": all(c.passed for c in checks)}
            )
            status["ok"] = all(c.passed for c in checks)
            _write_json(out_root / "status.json", status)
            return out_root

        jobs = []
        for value in plan.sweep_values:
            if plan.sweep_axis == "grid":
                jobs.append((value, plan.config, int(value), f"N_{int(value):05d}"))
            elif plan.sweep_axis == "epsilon":
                jobs.append(
                    (value, plan.config.with_(epsilon=float(value)), None,
                     f"eps_{float(value):.6e}")
                )
            else:
                jobs.append(
                    (value,
                     plan.config.with_(delta=float(value), mode="delta-elliptic"),
                     None,
                     f"delta_{float(value):.6e}")
                )

        width = plan.parallel
        env_cap = os.environ.get("OH_SOLVER_THREADS")
        if env_cap:
            width = min(width, max(1, int(env_cap)))

        def execute(job):
            value, config, n, subdir = job
            final, report, checks, _ = run_single(plan, config=config, n=n, subdir=subdir)
            return value, subdir, final, checks

        if width > 1:
            with ThreadPoolExecutor(max_workers=width) as pool:
                results = list(pool.map(execute, jobs))
        else:
            results = [execute(job) for job in jobs]

        # single-threaded merge
        finals = []
        all_passed = True
        for value, subdir, final, checks in results:
            ok = all(c.passed for c in checks)
            all_passed = all_passed and ok
            status["runs"].append({"subdir": subdir, "passed": ok})
            finals.append((value, final))

        convergence = _convergence_summary(plan, finals)
        _write_json(out_root / "convergence.json", convergence)
        status["ok"] = all_passed and convergence["passed"]
        _write_json(out_root / "status.json", status)
        return out_root
    except Exception:
        status["error"] = "aborted"
        _write_json(out_root / "status.json", status)
        raise


def _convergence_summary(plan, finals):
    """L1 differences between successive sweep levels and fitted orders."""
    diffs = []
    values = [v for v, _ in finals]
    if plan.sweep_axis == "grid":
        # compare on the coarser of each successive pair
        for (n_c, f_c), (n_f, f_f) in zip(finals[:-1], finals[1:]):
            if int(n_f) % int(n_c):
                raise ConfigError("grid sweep values must be nested (integer ratios)")
            factor = int(n_f) // int(n_c)
            coarse = f_c.u.values
            fine = _restrict(f_f.u.values, factor)
            diffs.append(_l1(fine - coarse, f_c.u.dx))
        ratios = [
            diffs[i] / diffs[i + 1] if diffs[i + 1] > 0 else float("inf")
            for i in range(len(diffs) - 1)
        ]
        orders = [float(np.log2(max(r, 1e-300))) for r in ratios]
        passed = all(r >= 1.5 for r in ratios) if ratios else True
    else:
        dx = finals[0][1].u.dx
        for (_, f_a), (_, f_b) in zip(finals[:-1], finals[1:]):
            diffs.append(_l1(f_a.u.values - f_b.u.values, dx))
        monotone = all(a >= b for a, b in zip(diffs[:-1], diffs[1:]))
        ratios = [
            diffs[i] / diffs[i + 1] if diffs[i + 1] > 0 else float("inf")
            for i in range(len(diffs) - 1)
        ]
        if plan.sweep_axis == "epsilon" and len(diffs) >= 2:
            steps = [
                abs(np.log(values[i] / values[i + 1]))
                for i in range(len(values) - 1)
            ]
            orders = [
                float(np.log(max(r, 1e-300)) / s) for r, s in zip(ratios, steps)
            ]
            passed = monotone and all(o >= 0.5 for o in orders)
        else:
            orders = []
            passed = monotone
    return {
        "axis": plan.sweep_axis,
        "values": [float(v) for v in values],
        "l1_differences": diffs,
        "ratios": ratios,
        "orders": orders,
        "passed": passed,
    }


def adjoint_check(plan):
    """Duality pairing between two runs of the plan's data.

    'schemes' pairs the two flux schemes from identical data; 'self' pairs a
    run against itself (the residual must vanish identically).  Returns the
    per-psi duality results.
    """
    grid = plan.grid()
    init = _build_initial(plan, grid)
    model = model_for(plan)
    tau = float(plan.adjoint_tau or plan.config.t_end)
    config_a = plan.config.with_(t_end=tau, flux_scheme="godunov")
    if plan.adjoint_compare == "self":
        config_b = config_a
    else:
        config_b = config_a.with_(flux_scheme="lax-friedrichs")

    times = np.linspace(0.0, tau, 129)
    _, rep_a = evolve.run_to_time(init, config_a, model, snapshot_times=times)
    _, rep_b = evolve.run_to_time(init, config_b, model, snapshot_times=times)
    u_st = _snapshot_matrix(rep_a, times)
    v_st = _snapshot_matrix(rep_b, times)

    b = adjoint.divided_difference_b(u_st, v_st, model)
    problem_times = times
    results = []
    for psi in adjoint.default_psi_library(tau, grid.half_width):
        problem = adjoint.AdjointProblem(
            grid=grid,
            b=b,
            b_times=problem_times,
            psi=psi,
            tau=tau,
            gamma=plan.config.gamma,
            epsilon_adj=max(plan.config.epsilon, grid.dx),
        )
        solution = adjoint.adjoint_solve_backward(problem, output_times=times)
        results.append(
            adjoint.duality_residual(
                u_st,
                v_st,
                psi,
                solution,
                b,
                problem.mollified(),
                gamma=plan.config.gamma,
                tol=plan.config.tolerances["duality"],
            )
        )
    return results


def _snapshot_matrix(report, times):
    stored = {round(t, 12): u for t, u, _ in report.snapshots}
    rows = []
    for t in times:
        key = round(float(t), 12)
        if key not in stored:
            raise ConfigError(f"snapshot at t = {t} missing from the run")
        rows.append(stored[key])
    return np.asarray(rows)

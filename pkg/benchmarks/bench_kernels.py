#!/usr/bin/env python3
"""Benchmark the compiled kernel core against the numpy/scipy reference.

Times the per-interface flux sweeps, the upwind gradient, the tridiagonal
solve, and a full solver step with each backend forced in turn.

Usage: python benchmarks/bench_kernels.py [--sizes 1024,4096,16384]
"""

import argparse
import time

import numpy as np

from ohsolver._kernels import available_backends, reference
from ohsolver.core import FluxModel, Grid1D, SolverConfig
from ohsolver.nonlocal_ops import _elliptic_system


def _best_of(fn, repeats=7):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def kernel_cases(n, backend):
    rng = np.random.default_rng(0)
    a = rng.uniform(-2, 2, n)
    b = rng.uniform(-2, 2, n)
    fa, fb = 0.5 * a**2, 0.5 * b**2
    w = rng.standard_normal(n)
    beta = rng.standard_normal(n)
    g = Grid1D(8.0, n)
    u = g.centers * np.exp(-g.centers**2)
    lower, diag, upper = _elliptic_system(u, 0.05, g.dx)
    loops = max(1, 1 << 22 >> int(np.log2(n)))  # keep total work comparable

    def flux():
        for _ in range(loops):
            backend.godunov_sweep(a, b, fa, fb, 0.0, 0.0)

    def lf():
        for _ in range(loops):
            backend.lax_friedrichs_sweep(a, b, fa, fb, 2.0)

    def upwind():
        for _ in range(loops):
            backend.upwind_gradient(w, beta, g.dx)

    def tridiag():
        for _ in range(loops):
            backend.tridiag_solve(lower, diag, upper, u)

    return {"godunov": (flux, loops), "lax-friedrichs": (lf, loops),
            "upwind": (upwind, loops), "tridiag": (tridiag, loops)}


def step_case(n, backend_name):
    import importlib
    import os

    os.environ["OH_SOLVER_KERNELS"] = backend_name
    import ohsolver._kernels as kernels

    importlib.reload(kernels)
    import ohsolver.evolve as evolve

    importlib.reload(evolve)
    from ohsolver.core import Field
    from ohsolver.profiles import hermite_bump

    g = Grid1D(8.0, n)
    cfg = SolverConfig(gamma=1.0, epsilon=1e-3, delta=1e-2, mode="delta-elliptic")
    model = FluxModel.burgers()
    u0 = hermite_bump(g)
    P = evolve._primitive_values(u0.values, g, cfg)
    state = evolve.StepRecord(0.0, 0.0, u0, Field(P, g), cfg.cfl)

    def run():
        s = state
        for _ in range(50):
            s = evolve.step_ssprk2(s, cfg, model, dt=1e-4)

    return run


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--sizes", default="1024,4096,16384")
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    backends = {"python": reference}
    if "compiled" in available_backends():
        from ohsolver._kernels import _fast

        backends["compiled"] = _fast
    else:
        print("compiled backend unavailable; benchmarking the reference only")

    print(f"{'kernel':16s} {'n':>7s} " + "".join(f"{k:>12s}" for k in backends) +
          ("     speedup" if len(backends) == 2 else ""))
    for n in sizes:
        rows = {}
        for name, backend in backends.items():
            for kernel, (fn, loops) in kernel_cases(n, backend).items():
                rows.setdefault(kernel, {})[name] = _best_of(fn) / loops
        for kernel, times in rows.items():
            line = f"{kernel:16s} {n:7d} "
            line += "".join(f"{times[k] * 1e6:10.2f}us" for k in backends)
            if len(backends) == 2:
                line += f" {times['python'] / times['compiled']:10.1f}x"
            print(line)

    print("\nfull delta-mode solver steps (50 steps, per-step time):")
    for n in sizes:
        line = f"{'step_ssprk2':16s} {n:7d} "
        per = {}
        for name in backends:
            per[name] = _best_of(step_case(n, name), repeats=3) / 50
            line += f"{per[name] * 1e6:10.2f}us"
        if len(backends) == 2:
            line += f" {per['python'] / per['compiled']:10.1f}x"
        print(line)


if __name__ == "__main__":
    main()

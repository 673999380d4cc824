"""Semi-discrete right-hand side and time integration.

The state is advanced by Heun's method (SSP-RK2) with a CFL-limited adaptive
step.  The nonlocal source is the cumulative primitive (direct mode) or the
regularized elliptic primitive (delta mode), optionally mean-corrected so the
discrete zero-mean identities hold exactly instead of up to quadrature drift.
The far field is the zero state; interior stencils see it through ghost
cells, and the outermost interfaces carry the exact far-field fluxes (zero),
which keeps the discrete mass constant to rounding error.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels, diagnostics
from .core import (
    BlowUpError,
    BoundaryContaminationError,
    ConfigError,
    DegenerateComparisonError,
    Field,
    SolverConfig,
)
from .fluxes import interface_fluxes
from .nonlocal_ops import _elliptic_system

_TINY = 1e-300


@dataclass(frozen=True)
class StepRecord:
    t: float
    dt: float
    u: Field
    P: Field
    cfl_used: float


def _primitive_values(uv, grid, config):
    """Source primitive of a raw state array, valued at cell centers.

    The running sum carries the integral up to the cell's right edge, so half
    the own-cell contribution is removed to land on the center; the elliptic
    mode is center-valued by construction, and the two modes then agree to
    O(delta) + O(dx^2) instead of differing by a half-cell offset.  Mean
    correction subtracts the spatial mean, so the primitive entering the
    source (and the records) has exactly zero integral: the zero-mean
    identity of the analysis is enforced rather than tracked up to drift.
    """
    dx = grid.dx
    if config.mode == "direct-primitive":
        P = np.cumsum(uv) * dx - 0.5 * dx * uv
    else:
        lower, diag, upper = _elliptic_system(uv, config.delta, dx)
        P = _kernels.tridiag_solve(lower, diag, upper, np.ascontiguousarray(uv))
    if config.mean_correction:
        P = P - np.mean(P)
    return P


def _rhs_values(uv, grid, config, model, P=None, include_diffusion=True):
    """Right-hand side on raw arrays; returns (rhs, P, alpha_used).

    The domain boundary is closed: the outermost interface fluxes are pinned
    to the far-field value f(0) = 0 and the viscous flux through the boundary
    vanishes.  For admissible (compactly supported) states this agrees with
    zero ghost cells to rounding error, and it makes the semi-discrete mass
    Sum(u) dx exactly constant, which the zero-mean source alone cannot
    guarantee once the truncation boundary is reached.
    """
    dx = grid.dx
    if P is None:
        P = _primitive_values(uv, grid, config)
    u_ext = np.zeros(uv.shape[0] + 4)
    u_ext[2:-2] = uv
    F, alpha = interface_fluxes(u_ext[1:-1], model, config.flux_scheme)
    F[0] = 0.0
    F[-1] = 0.0
    rhs = -(F[1:] - F[:-1]) / dx
    rhs += config.gamma * P
    if include_diffusion and config.epsilon > 0.0:
        refl = np.empty(uv.shape[0] + 2)
        refl[1:-1] = uv
        refl[0] = uv[0]
        refl[-1] = uv[-1]
        lap = (refl[2:] - 2.0 * uv + refl[:-2]) / dx**2
        rhs += config.epsilon * lap
    if not np.all(np.isfinite(rhs)):
        cell = int(np.argmin(np.isfinite(rhs)))
        raise BlowUpError("non-finite right-hand side", cell=cell)
    return rhs, P, alpha


def semidiscrete_rhs(u: Field, config: SolverConfig, model) -> Field:
    rhs, _, _ = _rhs_values(u.values, u.grid, config, model)
    return u.with_values(rhs)


def _cfl_dt_values(uv, P, grid, config, model):
    dx = grid.dx
    wave = float(np.max(np.abs(model.f_prime(uv)))) / dx
    diff = 0.0
    if config.epsilon > 0.0 and config.diffusion_scheme == "explicit":
        diff = 2.0 * config.epsilon / dx**2
    linf_u = float(np.max(np.abs(uv))) if uv.size else 0.0
    linf_P = float(np.max(np.abs(P))) if P is not None else 0.0
    source = abs(config.gamma) * linf_P / max(linf_u, _TINY)
    denom = wave + diff + source
    dt = config.cfl / denom if denom > 0.0 else math.inf
    return min(dt, config.cfl / (abs(config.gamma) + 1.0))


def cfl_dt(u: Field, config: SolverConfig, model, P: Field = None) -> float:
    """Stable explicit step: advective + diffusive rates plus a source cap.

    The source rate |gamma| ||P||_inf / ||u||_inf guards against the nonlocal
    term outrunning the state; the unconditional cap cfl/(|gamma|+1) keeps the
    step finite when the state vanishes.
    """
    Pv = P.values if P is not None else _primitive_values(u.values, u.grid, config)
    return _cfl_dt_values(u.values, Pv, u.grid, config, model)


def _crank_nicolson(uv, eps, dt, dx):
    """Half-implicit diffusion update with a zero-flux boundary closure."""
    n = uv.shape[0]
    r = 0.5 * eps * dt / dx**2
    ext = np.empty(n + 2)
    ext[1:-1] = uv
    ext[0] = uv[0]
    ext[-1] = uv[-1]
    rhs = uv + r * (ext[2:] - 2.0 * uv + ext[:-2])
    lower = np.full(n - 1, -r)
    upper = np.full(n - 1, -r)
    diag = np.full(n, 1.0 + 2.0 * r)
    diag[0] = 1.0 + r
    diag[-1] = 1.0 + r
    return _kernels.tridiag_solve(lower, diag, upper, rhs)


def _advance(uv, P, dt, grid, config, model):
    """One SSP-RK2 step from raw arrays; returns (u_new, P_new)."""
    explicit_diff = config.diffusion_scheme == "explicit"
    r1, _, _ = _rhs_values(uv, grid, config, model, P=P, include_diffusion=explicit_diff)
    u_star = uv + dt * r1
    r2, _, _ = _rhs_values(u_star, grid, config, model, include_diffusion=explicit_diff)
    u_new = 0.5 * (uv + u_star + dt * r2)
    if not explicit_diff and config.epsilon > 0.0:
        u_new = _crank_nicolson(u_new, config.epsilon, dt, grid.dx)
    if not np.all(np.isfinite(u_new)):
        cell = int(np.argmin(np.isfinite(u_new)))
        raise BlowUpError("non-finite state after step", cell=cell)
    return u_new, _primitive_values(u_new, grid, config)


def step_ssprk2(state: StepRecord, config: SolverConfig, model, dt=None) -> StepRecord:
    """Heun update u* = u + dt L(u), u+ = (u + u* + dt L(u*))/2.

    In implicit-diffusion mode the viscous term is removed from L and applied
    afterwards as a Crank-Nicolson solve.
    """
    grid = state.u.grid
    if dt is None:
        dt = _cfl_dt_values(state.u.values, state.P.values, grid, config, model)
    u_new, P_new = _advance(state.u.values, state.P.values, dt, grid, config, model)
    return StepRecord(
        t=state.t + dt,
        dt=dt,
        u=Field(u_new, grid),
        P=Field(P_new, grid),
        cfl_used=config.cfl,
    )


def geometric_snapshot_times(t_end, levels=10):
    """t_end * 2^(k-K) for k = 0..K; resolves the early 1/t regime."""
    return [t_end * 2.0 ** (k - levels) for k in range(levels + 1)]


def run_to_time(init, config: SolverConfig, model, observers=(), snapshot_times=None):
    """Advance from t = 0 to t_end; returns (final StepRecord, DiagnosticsReport).

    Observers are called as observer(prev_record, new_record) after every
    accepted step.  Snapshot times are hit exactly (the step is clipped).
    A blow-up or boundary contamination aborts with the partial report
    attached to the raised error.
    """
    grid = init.grid
    tol = config.resolved_tolerances(grid)
    recorder = diagnostics.Recorder(config, model, grid)
    observers = list(observers) + [recorder]

    if snapshot_times is None:
        snapshot_times = geometric_snapshot_times(config.t_end)
    pending = sorted(t for t in snapshot_times if 0.0 < t <= config.t_end)

    uv = init.u0.values.copy()
    Pv = _primitive_values(uv, grid, config)
    state = StepRecord(t=0.0, dt=0.0, u=Field(uv, grid), P=Field(Pv, grid), cfl_used=config.cfl)
    recorder.start(state)
    recorder.snapshot(state)

    n_buffer = max(1, grid.cell_count // 20)
    contamination = tol["contamination"]

    t = 0.0
    while t < config.t_end - 1e-13 * config.t_end:
        dt = _cfl_dt_values(state.u.values, state.P.values, grid, config, model)
        t_next = t + dt
        if pending and t_next >= pending[0] - 1e-13:
            t_next = pending[0]
        t_next = min(t_next, config.t_end)
        dt = t_next - t
        try:
            new_state = step_ssprk2(state, config, model, dt=dt)
        except BlowUpError as err:
            err.t = t
            err.report = recorder.finalize(aborted="blow-up")
            raise
        for obs in observers:
            obs(state, new_state)
        state = new_state
        t = state.t
        while pending and t >= pending[0] - 1e-13:
            recorder.snapshot(state)
            pending.pop(0)

        edges = np.concatenate(
            [state.u.values[:n_buffer], state.u.values[-n_buffer:]]
        )
        if np.any(np.abs(edges) > contamination):
            report = recorder.finalize(aborted="boundary-contamination")
            raise BoundaryContaminationError(
                f"state exceeded {contamination:.3g} in the outer 5% of cells",
                t=t,
                report=report,
            )
    return state, recorder.finalize()


@dataclass(frozen=True)
class StabilityReport:
    times: np.ndarray
    distances: np.ndarray
    fitted_C: float
    passed: bool


def stability_compare(init_a, init_b, config: SolverConfig, model) -> StabilityReport:
    """Evolve two states in lockstep and fit the L2 separation growth rate.

    Both runs share the step sequence (the smaller of the two CFL steps), so
    distances are measured at identical times.  Passes when the fitted
    exponent is finite, which is exactly the absence of super-exponential
    growth relative to d(0).
    """
    if init_a.grid is not init_b.grid and (
        init_a.grid.cell_count != init_b.grid.cell_count
        or init_a.grid.half_width != init_b.grid.half_width
    ):
        raise ConfigError("stability comparison requires a shared grid")
    if not config.epsilon > 0.0:
        raise ConfigError("stability comparison requires epsilon > 0")
    grid = init_a.grid
    dx = grid.dx

    ua = init_a.u0.values.copy()
    ub = init_b.u0.values.copy()
    d0 = float(np.sqrt(np.sum((ua - ub) ** 2) * dx))
    if d0 == 0.0:
        raise DegenerateComparisonError("identical initial data")

    Pa = _primitive_values(ua, grid, config)
    Pb = _primitive_values(ub, grid, config)
    times = [0.0]
    dists = [d0]
    t = 0.0
    while t < config.t_end - 1e-13 * config.t_end:
        dt = min(
            _cfl_dt_values(ua, Pa, grid, config, model),
            _cfl_dt_values(ub, Pb, grid, config, model),
            config.t_end - t,
        )
        ua, Pa = _advance(ua, Pa, dt, grid, config, model)
        ub, Pb = _advance(ub, Pb, dt, grid, config, model)
        t += dt
        times.append(t)
        dists.append(float(np.sqrt(np.sum((ua - ub) ** 2) * dx)))

    times = np.asarray(times)
    dists = np.asarray(dists)
    positive = (times > 0.0) & (dists > 0.0)
    if np.any(positive):
        fitted = float(np.max(np.log(dists[positive] / d0) / times[positive]))
    else:
        fitted = -math.inf
    return StabilityReport(
        times=times,
        distances=dists,
        fitted_C=fitted,
        passed=math.isfinite(fitted) or fitted == -math.inf,
    )

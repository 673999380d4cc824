import numpy as np
import pytest

from ohsolver.core import Field, FluxModel, Grid1D, SolverConfig, validate_initial_data
from ohsolver.diagnostics import (
    detect_jumps,
    energy_ledger_check,
    entropy_residual,
    entropy_residual_heun,
    evaluate_report,
    fit_oleinik_constant,
    oleinik_quotient,
)
from ohsolver.evolve import _cfl_dt_values, _primitive_values, _rhs_values, run_to_time
from ohsolver.fluxes import quadratic_entropy
from ohsolver.profiles import hermite_bump, riemann

MODEL = FluxModel.burgers()


def test_oleinik_quotient_basics():
    g = Grid1D(4.0, 64)
    assert oleinik_quotient(Field(np.full(64, 2.0), g)) == 0.0
    assert oleinik_quotient(Field(g.centers.copy(), g)) == pytest.approx(1.0)
    dec = Field(np.sort(np.random.default_rng(0).standard_normal(64))[::-1], g)
    assert oleinik_quotient(dec) <= 0.0


def test_oleinik_dominates_all_pairs():
    g = Grid1D(4.0, 256)
    rng = np.random.default_rng(4)
    u = Field(rng.standard_normal(256), g)
    sup = oleinik_quotient(u)
    i = rng.integers(0, 256, 10_000)
    j = rng.integers(0, 256, 10_000)
    keep = i != j
    i, j = i[keep], j[keep]
    q = (u.values[j] - u.values[i]) / (g.centers[j] - g.centers[i])
    assert np.max(q) <= sup + 1e-12


def test_fit_oleinik_constant():
    assert fit_oleinik_constant([0.1, 0.5, 1.0], [0.0, 0.0, 0.0]) == 0.0
    t = np.array([0.1, 0.2, 0.5, 1.0])
    c = fit_oleinik_constant(t, 1.0 / t)
    assert c == pytest.approx(np.max((1 / t) / (1 / t + 1)))
    assert c < 1.0
    with pytest.raises(ValueError):
        fit_oleinik_constant([], [])
    with pytest.raises(ValueError):
        fit_oleinik_constant([0.0, 0.1], [1.0, 1.0])


def test_entropy_residual_zero_state():
    g = Grid1D(4.0, 64)
    z = Field(np.zeros(64), g)
    pair = quadratic_entropy(MODEL)
    r = entropy_residual(z, z, z, 0.1, pair, MODEL, "lax-friedrichs", 1.0)
    assert np.array_equal(r.values, np.zeros(64))


def test_entropy_residual_constant_state_interior():
    g = Grid1D(4.0, 64)
    c = Field(np.full(64, 0.8), g)
    pair = quadratic_entropy(MODEL)
    r = entropy_residual(c, c, Field(np.zeros(64), g), 0.1, pair, MODEL,
                         "lax-friedrichs", 0.0)
    assert np.max(np.abs(r.values[1:-1])) <= 1e-12


def test_entropy_residual_first_step_order():
    # one Euler step from smooth data: the residual is O(dx) and halves
    maxima = []
    for n in (512, 1024, 2048):
        g = Grid1D(8.0, n)
        cfg = SolverConfig(gamma=1.0, epsilon=0.0, flux_scheme="lax-friedrichs")
        u = hermite_bump(g)
        P = Field(_primitive_values(u.values, g, cfg), g)
        dt = _cfl_dt_values(u.values, P.values, g, cfg, MODEL)
        rhs, _, _ = _rhs_values(u.values, g, cfg, MODEL, P=P.values)
        r = entropy_residual(u, Field(u.values + dt * rhs, g), P, dt,
                             quadratic_entropy(MODEL), MODEL, "lax-friedrichs", 1.0)
        maxima.append(float(np.max(r.values)))
    order = np.log2(maxima[0] / maxima[-1]) / (len(maxima) - 1)
    assert order >= 1.0


def test_entropy_residual_stationary_shock_dissipates():
    # closed-form LF oracle: at the cell left of the jump, one Euler step with
    # lambda = dt/dx gives R = (-1 + lambda/2 - 1/3)/dx < 0
    g = Grid1D(2.0, 128)
    u = np.where(g.centers < 0, 1.0, -1.0)
    cfg = SolverConfig(gamma=0.0, epsilon=0.0, flux_scheme="lax-friedrichs",
                       mean_correction=False)
    P = Field(_primitive_values(u, g, cfg), g)
    lam = 0.4
    dt = lam * g.dx
    rhs, _, _ = _rhs_values(u, g, cfg, MODEL, P=P.values)
    u_next = u + dt * rhs
    pair = quadratic_entropy(MODEL)
    r = entropy_residual(Field(u, g), Field(u_next, g), P, dt, pair, MODEL,
                         "lax-friedrichs", 0.0)
    assert np.max(r.values[1:-1]) <= 1e-10
    i = np.searchsorted(g.centers, 0.0) - 1
    want = (-1.0 + lam / 2.0 - 1.0 / 3.0) / g.dx
    assert r.values[i] == pytest.approx(want, rel=1e-6)


def test_entropy_residual_heun_negative_at_shock():
    g = Grid1D(2.0, 128)
    u = np.where(g.centers < 0, 1.0, -1.0)
    cfg = SolverConfig(gamma=0.0, epsilon=0.0, flux_scheme="lax-friedrichs",
                       mean_correction=False)
    P = Field(_primitive_values(u, g, cfg), g)
    dt = 0.4 * g.dx
    rhs, _, _ = _rhs_values(u, g, cfg, MODEL, P=P.values)
    u_star = u + dt * rhs
    rhs2, _, _ = _rhs_values(u_star, g, cfg, MODEL)
    u_next = 0.5 * (u + u_star + dt * rhs2)
    r = entropy_residual_heun(
        Field(u, g), Field(u_star, g), Field(u_next, g), P,
        Field(_primitive_values(u_star, g, cfg), g), dt,
        quadratic_entropy(MODEL), MODEL, "lax-friedrichs", 0.0,
    )
    assert np.max(r.values[1:-1]) <= 1e-10


def test_detect_jumps_smooth_profile():
    g = Grid1D(4.0, 4096)
    u = Field(np.tanh(g.centers), g)  # max slope 1, max adjacent diff ~ dx
    assert detect_jumps(u, 0.5) == []


def test_detect_jumps_stationary_shock():
    g = Grid1D(2.0, 256)
    u = Field(np.where(g.centers < 0, 1.0, -1.0), g)
    events = detect_jumps(u, 0.5, t=0.3)
    assert len(events) == 1
    assert events[0].classification == "admissible-down"
    assert events[0].t == 0.3
    assert abs(events[0].x) <= g.dx


def test_detect_jumps_scale_covariant():
    g = Grid1D(2.0, 256)
    rng = np.random.default_rng(7)
    u = np.cumsum(rng.standard_normal(256)) * 0.2
    for lam in (0.5, 3.0):
        base = detect_jumps(Field(u, g), 0.4)
        scaled = detect_jumps(Field(lam * u, g), lam * 0.4)
        assert [e.classification for e in base] == [e.classification for e in scaled]
        assert [e.x for e in base] == [e.x for e in scaled]


def test_detect_jumps_threshold_guard():
    g = Grid1D(2.0, 64)
    with pytest.raises(ValueError):
        detect_jumps(Field(np.zeros(64), g), 0.0)


def test_energy_ledger_zero_run():
    g = Grid1D(8.0, 128)
    cfg = SolverConfig(gamma=1.0, t_end=0.3)
    init = validate_initial_data(Field(np.zeros(128), g), cfg)
    _, report = run_to_time(init, cfg, MODEL)
    ok, defect = energy_ledger_check(report, cfg)
    assert ok
    assert defect == 0.0


def test_energy_ledger_post_shock_decreasing():
    g = Grid1D(8.0, 1024)
    cfg = SolverConfig(gamma=0.0, epsilon=1e-3, t_end=1.0)
    init = validate_initial_data(hermite_bump(g), cfg)
    _, report = run_to_time(init, cfg, MODEL)
    ok, _ = energy_ledger_check(report, cfg)
    assert ok
    assert report.energy_ledger[-1] < report.energy_ledger[0]
    assert np.all(np.diff(report.energy_ledger) <= 1e-6 * report.energy_ledger[0])


def test_evaluate_report_all_pass():
    g = Grid1D(8.0, 512)
    cfg = SolverConfig(gamma=1.0, epsilon=1e-3, t_end=0.5)
    init = validate_initial_data(hermite_bump(g), cfg)
    _, report = run_to_time(init, cfg, MODEL)
    checks = evaluate_report(report, cfg, MODEL)
    names = {c.name for c in checks}
    assert {"mass-conservation", "primitive-zero-mean", "energy-ledger",
            "linf-growth", "oleinik-fit", "entropy-residual",
            "jump-admissibility"} <= names
    assert all(c.passed for c in checks)
    for c in checks:
        assert c.statement


def test_evaluate_report_up_jump_settles():
    g = Grid1D(8.0, 1024)
    cfg = SolverConfig(gamma=0.0, epsilon=0.0, t_end=0.5)
    init = validate_initial_data(riemann(g, -1.0, 1.0), cfg, relax_mass=True)
    _, report = run_to_time(init, cfg, MODEL)
    checks = {c.name: c for c in evaluate_report(report, cfg, MODEL)}
    # the seeded up-jump is a transient; after the settling window only
    # admissible structures may persist
    assert checks["jump-admissibility"].passed

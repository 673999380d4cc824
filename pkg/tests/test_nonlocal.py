import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ohsolver.core import Field, Grid1D
from ohsolver.nonlocal_ops import (
    compute_primitive,
    elliptic_solve_delta,
    second_primitive,
    zero_mean_project,
)
from ohsolver.profiles import gauss_derivative, random_zero_mean


def test_primitive_zero():
    g = Grid1D(2.0, 64)
    P = compute_primitive(Field(np.zeros(64), g))
    assert np.array_equal(P.values, np.zeros(64))


def test_primitive_indicator_exact_at_edges():
    # cells tile [0, 1) exactly, so the running sum matches the ramp there
    g = Grid1D(2.0, 256)
    u = Field(((g.centers >= 0) & (g.centers < 1.0)).astype(float), g)
    P = compute_primitive(u)
    exact = np.clip(g.right_edges, 0.0, 1.0)
    exact[g.right_edges < 0.0] = 0.0
    assert np.max(np.abs(P.values - exact)) <= 1e-14


def test_primitive_gaussian_antiderivative():
    # closed form: d/dx exp(-x^2) = -2 x exp(-x^2); values live on right edges
    g = Grid1D(8.0, 2048)
    P = compute_primitive(gauss_derivative(g))
    assert np.max(np.abs(P.values - np.exp(-g.right_edges**2))) <= 5e-4


def test_primitive_forward_difference_recovers_state():
    g = Grid1D(8.0, 512)
    u = random_zero_mean(g, seed=3)
    P = compute_primitive(u)
    back = np.diff(np.concatenate([[0.0], P.values])) / g.dx
    assert np.max(np.abs(back - u.values)) <= 1e-11


@settings(max_examples=25, deadline=None)
@given(
    seed=st.integers(0, 10_000),
    a=st.floats(-3, 3, allow_nan=False),
    b=st.floats(-3, 3, allow_nan=False),
)
def test_primitive_linear(seed, a, b):
    g = Grid1D(4.0, 128)
    rng = np.random.default_rng(seed)
    u = Field(rng.standard_normal(128), g)
    v = Field(rng.standard_normal(128), g)
    lhs = compute_primitive(Field(a * u.values + b * v.values, g)).values
    rhs = a * compute_primitive(u).values + b * compute_primitive(v).values
    assert np.max(np.abs(lhs - rhs)) <= 1e-10


def test_primitive_zero_mean_vanishes_at_far_end():
    g = Grid1D(8.0, 1024)
    u = random_zero_mean(g, seed=11)
    P = compute_primitive(u)
    assert abs(P.values[-1]) <= 1e-12


def test_second_primitive_matches_chained():
    g = Grid1D(8.0, 512)
    u = gauss_derivative(g)
    P = compute_primitive(u)
    F = second_primitive(P)
    assert np.array_equal(F.values, compute_primitive(P).values)


def test_zero_mean_project():
    g = Grid1D(4.0, 128)
    out = zero_mean_project(Field(np.full(128, 3.0), g))
    assert np.max(np.abs(out.values)) <= 1e-14
    # x + 1 -> x on the symmetric grid
    out = zero_mean_project(Field(g.centers + 1.0, g))
    assert np.max(np.abs(out.values - g.centers)) <= 1e-13
    # idempotent, exactly zero mean
    again = zero_mean_project(out)
    assert np.max(np.abs(again.values - out.values)) <= 1e-15
    assert abs(out.integral()) <= 1e-13


def _manufactured(grid, delta):
    x = grid.centers
    P_star = np.exp(-(x**2))
    u = -delta * (4.0 * x**2 - 2.0) * np.exp(-(x**2)) - 2.0 * x * np.exp(-(x**2))
    return Field(u, grid), P_star


def test_elliptic_zero():
    g = Grid1D(8.0, 256)
    P, stats = elliptic_solve_delta(Field(np.zeros(256), g), 0.1)
    assert np.array_equal(P.values, np.zeros(256))
    assert stats.identity_residual == 0.0


def test_elliptic_manufactured_accuracy_and_order():
    errs = []
    residuals = []
    for n in (2048, 4096, 8192):
        g = Grid1D(8.0, n)
        u, P_star = _manufactured(g, 0.1)
        P, stats = elliptic_solve_delta(u, 0.1)
        errs.append(np.max(np.abs(P.values - P_star)))
        residuals.append(stats.identity_residual)
    assert errs[0] <= 1e-4
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(np.abs(orders - 2.0) <= 0.2)
    assert residuals[0] <= 1e-3
    assert residuals[0] > residuals[1] > residuals[2]


def test_elliptic_boundary_diagnostic_small():
    g = Grid1D(8.0, 2048)
    u, _ = _manufactured(g, 0.1)
    _, stats = elliptic_solve_delta(u, 0.1)
    assert stats.max_boundary_value <= 1e-8


def test_elliptic_under_resolved_warns():
    g = Grid1D(8.0, 64)
    u = Field(np.ones(64), g)
    with pytest.warns(UserWarning, match="under-resolved"):
        elliptic_solve_delta(u, 1e-6)


@pytest.mark.parametrize("seed,rough", [(0, False), (1, True), (2, False), (3, True)])
def test_elliptic_inequalities(seed, rough):
    # sqrt(delta) sup|P'| <= ||u||_L2 and (u, P) <= ||u||^2 with 1% slack
    g = Grid1D(8.0, 1024)
    u = random_zero_mean(g, seed=seed, rough=rough)
    delta = 0.1
    P, _ = elliptic_solve_delta(u, delta)
    ghost = np.concatenate([[-P.values[0]], P.values, [-P.values[-1]]])
    P_x = np.diff(ghost) / g.dx
    assert np.sqrt(delta) * np.max(np.abs(P_x)) <= u.l2() * 1.01
    assert float(np.sum(u.values * P.values) * g.dx) <= u.l2() ** 2 * 1.01


def test_elliptic_delta_to_zero_gap_monotone():
    g = Grid1D(8.0, 2048)
    u = gauss_derivative(g)
    P_direct = compute_primitive(u)
    gaps = []
    for delta in (1e-1, 1e-2, 1e-3):
        P, _ = elliptic_solve_delta(u, delta)
        gaps.append(np.max(np.abs(P.values - P_direct.values)))
    assert gaps[0] > gaps[1] > gaps[2]

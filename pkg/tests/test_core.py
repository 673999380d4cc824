import math

import numpy as np
import pytest

from ohsolver.core import (
    ConfigError,
    Field,
    FluxModel,
    Grid1D,
    InitialDataError,
    InvalidFluxError,
    SolverConfig,
    validate_flux,
    validate_initial_data,
)
from ohsolver.profiles import hermite_bump, riemann


def test_grid_basics():
    g = Grid1D(8.0, 2048)
    assert g.dx == pytest.approx(16.0 / 2048)
    assert g.centers[0] == pytest.approx(-8.0 + 0.5 * g.dx)
    assert np.all(np.diff(g.centers) > 0)


def test_grid_symmetry_exact():
    g = Grid1D(8.0, 1024)
    assert np.max(np.abs(g.centers + g.centers[::-1])) <= 1e-15 * g.half_width


@pytest.mark.parametrize("n", [0, 1, 3])
def test_grid_too_small(n):
    with pytest.raises(ValueError):
        Grid1D(1.0, n)


def test_field_validation():
    g = Grid1D(1.0, 8)
    with pytest.raises(ValueError):
        Field(np.zeros(7), g)
    with pytest.raises(ValueError):
        Field(np.array([0.0] * 7 + [np.nan]), g)
    f = Field(np.ones(8), g)
    assert f.integral() == pytest.approx(2.0)
    assert f.l2() == pytest.approx(math.sqrt(2.0))
    assert f.linf() == 1.0


def test_validate_flux_burgers():
    report = validate_flux(FluxModel.burgers(), state_range=(-2.0, 2.0))
    assert report.passed
    assert report.c_measured == pytest.approx(1.0)
    assert report.C1_measured == pytest.approx(1.0)
    assert report.f_at_zero == 0.0


def test_validate_flux_quartic_fails():
    # f'' vanishes at the origin, violating any positive convexity floor
    quartic = FluxModel(
        f=lambda u: np.asarray(u) ** 4,
        f_prime=lambda u: 4.0 * np.asarray(u) ** 3,
        f_second=lambda u: 12.0 * np.asarray(u) ** 2,
        convexity_floor=0.1,
        growth_constant=4.0,
        state_range=(-1.0, 1.0),
    )
    report = validate_flux(quartic, samples=257)
    assert not report.passed
    assert report.c_measured == pytest.approx(0.0, abs=1e-3)


def test_validate_flux_cosh():
    # dense-sampling oracle: min f'' = cosh(0) = 1, max |f'(u)/u| = sinh(1)
    cosh_model = FluxModel(
        f=lambda u: np.cosh(u) - 1.0,
        f_prime=np.sinh,
        f_second=np.cosh,
        convexity_floor=0.999,
        growth_constant=math.sinh(1.0) * (1.0 + 1e-9),
        state_range=(-1.0, 1.0),
    )
    report = validate_flux(cosh_model, samples=513)
    assert report.passed
    assert report.c_measured == pytest.approx(1.0, abs=1e-12)
    assert report.C1_measured == pytest.approx(math.sinh(1.0), rel=1e-6)


def test_validate_flux_nonfinite_raises():
    bad = FluxModel(
        f=lambda u: np.where(np.asarray(u) > 0.5, np.inf, 0.5 * np.asarray(u) ** 2),
        f_prime=lambda u: np.asarray(u),
        f_second=lambda u: np.ones_like(np.asarray(u, dtype=float)),
        state_range=(-1.0, 1.0),
    )
    with pytest.raises(InvalidFluxError):
        validate_flux(bad)


def test_validated_flux_prime_increasing():
    model = FluxModel.burgers()
    u = np.linspace(*model.state_range, 257)
    assert np.all(np.diff(model.f_prime(u)) > 0)


def test_sonic_point_cached():
    model = FluxModel.burgers()
    us, fs = model.sonic_point()
    assert abs(us) <= 1e-12
    assert fs == pytest.approx(0.0, abs=1e-24)
    assert model.sonic_point() is model.sonic_point()


def test_initial_data_zero_accepted():
    g = Grid1D(8.0, 256)
    init = validate_initial_data(Field(np.zeros(256), g))
    assert init.provenance["mass"] == 0.0
    assert init.provenance["l2_P0"] == 0.0


def test_initial_data_hermite():
    # Gaussian-moment oracle: integral 4 x^2 exp(-2 x^2) dx = sqrt(pi/2)
    g = Grid1D(8.0, 2048)
    init = validate_initial_data(hermite_bump(g))
    assert abs(init.provenance["mass"]) <= 1e-12
    assert abs(init.provenance["p_mass"]) <= 1e-12
    # right-edge quadrature of the primitive is O(dx^2) accurate
    assert init.provenance["l2_P0"] ** 2 == pytest.approx(math.sqrt(math.pi / 2.0), rel=5e-5)


def test_initial_data_step_rejected_without_relax():
    # P0 is a unit triangle, its integral is 1
    g = Grid1D(8.0, 2048)
    u0 = riemann(g, 1.0, -1.0)
    with pytest.raises(InitialDataError) as err:
        validate_initial_data(u0)
    assert err.value.p_mass == pytest.approx(1.0, abs=1e-2)
    init = validate_initial_data(u0, relax_mass=True)
    assert init.provenance["relaxed"]


def test_initial_data_idempotent():
    g = Grid1D(8.0, 512)
    init = validate_initial_data(hermite_bump(g))
    again = validate_initial_data(init.u0)
    assert np.array_equal(again.u0.values, init.u0.values)


def test_initial_data_support_warning():
    g = Grid1D(8.0, 512)
    with pytest.warns(UserWarning, match="outer 10%"):
        validate_initial_data(hermite_bump(g, center=7.5), relax_mass=True)


def test_config_invariants():
    with pytest.raises(ConfigError):
        SolverConfig(mode="delta-elliptic", delta=0.0)
    with pytest.raises(ConfigError):
        SolverConfig(cfl=0.0)
    with pytest.raises(ConfigError):
        SolverConfig(cfl=1.5)
    with pytest.raises(ConfigError):
        SolverConfig(flux_scheme="roe")
    with pytest.raises(ConfigError):
        SolverConfig(tolerances={"masss": 1.0})
    cfg = SolverConfig(mode="delta-elliptic", delta=0.1)
    assert cfg.delta == 0.1


def test_resolved_tolerances_echo():
    cfg = SolverConfig()
    g = Grid1D(8.0, 1000)
    tol = cfg.resolved_tolerances(g)
    assert tol["mass"] == pytest.approx(1e-10 * 1000 * g.dx)
    assert tol["pmass"] == tol["mass"]

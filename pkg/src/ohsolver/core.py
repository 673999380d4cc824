"""Domain types, configuration, and validation of the standing assumptions.

The solver works on a uniform cell-centered mesh truncating the real line to
[-L, L], with the convention that the state vanishes identically outside.
Admissible initial data must therefore decay well inside the boundary and
carry zero mean together with a zero-mean cumulative primitive.
"""

import math
import warnings
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable

import numpy as np


class OHSolverError(Exception):
    """Base class for solver errors."""


class InvalidFluxError(OHSolverError):
    pass


class InitialDataError(OHSolverError):
    """Rejected initial data; carries the measured integrals."""

    def __init__(self, message, mass=None, p_mass=None):
        super().__init__(message)
        self.mass = mass
        self.p_mass = p_mass


class ConfigError(OHSolverError):
    pass


class BlowUpError(OHSolverError):
    """Non-finite state during time integration."""

    def __init__(self, message, t=None, cell=None, report=None):
        super().__init__(message)
        self.t = t
        self.cell = cell
        self.report = report


class DegenerateComparisonError(OHSolverError):
    pass


class BoundaryContaminationError(OHSolverError):
    """State reached the outer buffer cells; the truncation is no longer exact."""

    def __init__(self, message, t=None, report=None):
        super().__init__(message)
        self.t = t
        self.report = report


@dataclass(frozen=True)
class Grid1D:
    """Uniform cell-centered mesh on [-L, L] with N cells."""

    half_width: float
    cell_count: int

    def __post_init__(self):
        if not (self.half_width > 0.0 and math.isfinite(self.half_width)):
            raise ValueError("half_width must be positive and finite")
        if self.cell_count < 4:
            raise ValueError("cell_count must be at least 4")

    @property
    def dx(self):
        return 2.0 * self.half_width / self.cell_count

    @cached_property
    def centers(self):
        i = np.arange(self.cell_count)
        x = -self.half_width + (i + 0.5) * self.dx
        x.setflags(write=False)
        return x

    @cached_property
    def right_edges(self):
        """Edges x_{i+1/2}; cumulative primitives naturally live here."""
        x = self.centers + 0.5 * self.dx
        x.setflags(write=False)
        return x


@dataclass(frozen=True)
class Field:
    """Array of cell values bound to a grid.  Values are finite by contract."""

    values: np.ndarray
    grid: Grid1D

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.cell_count,):
            raise ValueError(
                f"field length {v.shape} does not match grid {self.grid.cell_count}"
            )
        if not np.all(np.isfinite(v)):
            raise ValueError("field contains non-finite entries")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def dx(self):
        return self.grid.dx

    def integral(self):
        return float(np.sum(self.values) * self.dx)

    def l2(self):
        return float(np.sqrt(np.sum(self.values**2) * self.dx))

    def linf(self):
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0

    def with_values(self, values):
        return Field(values, self.grid)


@dataclass
class FluxModel:
    """Strictly convex flux with derivatives and declared assumption constants.

    convexity_floor is the lower bound demanded of f'' on the validated range;
    growth_constant bounds |f'(u)|/|u| there.  The two constants are
    independent (a single shared constant would force a quadratic flux).
    """

    f: Callable
    f_prime: Callable
    f_second: Callable
    convexity_floor: float = 1.0
    growth_constant: float = 1.0
    state_range: tuple = (-2.0, 2.0)
    name: str = "custom"
    require_convex: bool = True

    def __post_init__(self):
        if self.require_convex and not (self.convexity_floor > 0.0):
            raise ValueError("convexity_floor must be positive")
        if self.require_convex and not (self.growth_constant > 0.0):
            raise ValueError("growth_constant must be positive")
        lo, hi = self.state_range
        if not lo < hi:
            raise ValueError("state_range must be a nonempty interval")
        self._sonic = None

    @classmethod
    def burgers(cls, state_range=(-4.0, 4.0)):
        return cls(
            f=lambda u: 0.5 * np.asarray(u) ** 2,
            f_prime=lambda u: np.asarray(u) + 0.0,
            f_second=lambda u: np.ones_like(np.asarray(u, dtype=float)),
            convexity_floor=1.0,
            growth_constant=1.0,
            state_range=state_range,
            name="burgers",
        )

    @classmethod
    def frozen(cls, state_range=(-4.0, 4.0)):
        """Zero flux; disables advection.  Test hook, skips convexity checks."""
        zero = lambda u: np.zeros_like(np.asarray(u, dtype=float))  # noqa: E731
        return cls(
            f=zero,
            f_prime=zero,
            f_second=zero,
            convexity_floor=1.0,
            growth_constant=1.0,
            state_range=state_range,
            name="frozen",
            require_convex=False,
        )

    def sonic_point(self, tol=1e-12):
        """Minimizer of f on the state range (where f' crosses zero).

        f' is strictly increasing for a validated convex flux, so bisection
        converges to the unique root; cached after the first call.
        """
        if self._sonic is not None:
            return self._sonic
        lo, hi = self.state_range
        flo = float(self.f_prime(lo))
        fhi = float(self.f_prime(hi))
        if flo >= 0.0:
            us = lo
        elif fhi <= 0.0:
            us = hi
        else:
            a, b = lo, hi
            while b - a > tol:
                mid = 0.5 * (a + b)
                if float(self.f_prime(mid)) < 0.0:
                    a = mid
                else:
                    b = mid
            us = 0.5 * (a + b)
        self._sonic = (float(us), float(self.f(us)))
        return self._sonic


@dataclass(frozen=True)
class FluxValidation:
    c_measured: float
    C1_measured: float
    f_at_zero: float
    f_prime_at_zero: float
    passed: bool
    messages: tuple


def validate_flux(model, state_range=None, samples=256, tol=1e-10):
    """Sample-check convexity, sublinear growth of f', and f(0)=0.

    Fails (never raises) on a violated assumption; raises InvalidFluxError
    only for non-finite flux values.
    """
    if samples < 16:
        raise ValueError("need at least 16 samples")
    lo, hi = state_range if state_range is not None else model.state_range
    if not (lo <= 0.0 <= hi):
        raise ValueError("validation range must contain 0")
    u = np.linspace(lo, hi, samples)
    fu = np.asarray(model.f(u), dtype=float)
    fpu = np.asarray(model.f_prime(u), dtype=float)
    fsu = np.asarray(model.f_second(u), dtype=float)
    if not (np.all(np.isfinite(fu)) and np.all(np.isfinite(fpu)) and np.all(np.isfinite(fsu))):
        raise InvalidFluxError("non-finite flux value in the validation range")

    c_measured = float(np.min(fsu))
    nonzero = np.abs(u) > 1e-12
    ratios = np.abs(fpu[nonzero]) / np.abs(u[nonzero])
    C1_measured = float(np.max(ratios)) if ratios.size else 0.0
    f0 = float(model.f(0.0))
    fp0 = float(model.f_prime(0.0))

    messages = []
    ok = True
    if not (c_measured >= model.convexity_floor > 0.0):
        ok = False
        messages.append(
            f"min sampled f'' = {c_measured:.6g} below floor {model.convexity_floor:.6g}"
        )
    if not (C1_measured <= model.growth_constant * (1.0 + 1e-12)):
        ok = False
        messages.append(
            f"max sampled |f'(u)|/|u| = {C1_measured:.6g} exceeds {model.growth_constant:.6g}"
        )
    if abs(f0) > tol:
        ok = False
        messages.append(f"f(0) = {f0:.3g} not normalized to 0")
    if abs(fp0) > tol:
        ok = False
        messages.append(f"f'(0) = {fp0:.3g} nonzero")
    return FluxValidation(
        c_measured=c_measured,
        C1_measured=C1_measured,
        f_at_zero=f0,
        f_prime_at_zero=fp0,
        passed=ok,
        messages=tuple(messages),
    )


DEFAULT_TOLERANCES = {
    "mass_factor": 1e-10,      # tol_mass = mass_factor * N * dx
    "support": 1e-8,           # admissible magnitude in the outer cells
    "ineq": 1e-2,              # slack on the regularized-primitive inequalities
    "energy": 1e-6,            # relative slack on the energy ledger
    "linf": 1e-6,              # absolute slack on the comparison bound
    "quad": 1e-6,              # entropy-flux / primitive consistency
    "entropy_K": 2.5,          # cell entropy residual bound K*(dx + sigma)
    "pmass": None,             # primitive mean drift; defaults to tol_mass
    "contamination": 1e-2,     # runtime abort level for the outer 5% of cells
    "stability": 1e-9,         # slack on the fitted two-run growth bound
    "duality": 1e-9,           # slack on the duality-ledger inequality
    "dd_factor": 1e-12,        # divided-difference guard scale
    "jump_fraction": 0.25,     # jump threshold as a fraction of the u-range
    "jump_settle_frac": 0.1,   # events before this fraction of t_end are transients
}

MODES = ("direct-primitive", "delta-elliptic")
FLUX_SCHEMES = ("godunov", "lax-friedrichs")
DIFFUSION_SCHEMES = ("explicit", "implicit")


@dataclass(frozen=True)
class SolverConfig:
    gamma: float = 1.0
    epsilon: float = 0.0
    delta: float = 0.0
    cfl: float = 0.4
    t_end: float = 1.0
    mode: str = "direct-primitive"
    flux_scheme: str = "godunov"
    diffusion_scheme: str = "explicit"
    mean_correction: bool = True
    tolerances: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (0.0 < self.cfl <= 1.0):
            raise ConfigError(f"cfl must lie in (0, 1], got {self.cfl}")
        if self.t_end <= 0.0:
            raise ConfigError("t_end must be positive")
        if self.epsilon < 0.0 or self.delta < 0.0:
            raise ConfigError("epsilon and delta must be nonnegative")
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.mode == "delta-elliptic" and not self.delta > 0.0:
            raise ConfigError("mode 'delta-elliptic' requires delta > 0")
        if self.flux_scheme not in FLUX_SCHEMES:
            raise ConfigError(f"unknown flux_scheme {self.flux_scheme!r}")
        if self.diffusion_scheme not in DIFFUSION_SCHEMES:
            raise ConfigError(f"unknown diffusion_scheme {self.diffusion_scheme!r}")
        tol = dict(DEFAULT_TOLERANCES)
        for key, value in self.tolerances.items():
            if key not in DEFAULT_TOLERANCES:
                raise ConfigError(f"unknown tolerance {key!r}")
            tol[key] = None if value is None else float(value)
        object.__setattr__(self, "tolerances", tol)

    def resolved_tolerances(self, grid):
        """Concrete tolerance values for a given grid (echoed into reports)."""
        tol = dict(self.tolerances)
        tol["mass"] = tol["mass_factor"] * grid.cell_count * grid.dx
        if tol["pmass"] is None:
            tol["pmass"] = tol["mass"]
        return tol

    def with_(self, **kwargs):
        return replace(self, **kwargs)


@dataclass(frozen=True)
class InitialData:
    u0: Field
    P0: Field
    provenance: dict

    @property
    def grid(self):
        return self.u0.grid


def validate_initial_data(u0, config=None, relax_mass=False, profile="custom"):
    """Check the zero-mean constraints and build the cumulative primitive.

    Both the state and its primitive must have vanishing integral (up to
    tol_mass) for the decay framework to apply.  relax_mass admits violating
    data (Riemann experiments); the override is recorded in provenance.
    """
    from .nonlocal_ops import compute_primitive

    config = config or SolverConfig()
    grid = u0.grid
    tol = config.resolved_tolerances(grid)
    P0 = compute_primitive(u0)
    mass = u0.integral()
    p_mass = P0.integral()

    provenance = {
        "profile": profile,
        "mass": mass,
        "p_mass": p_mass,
        "l2_u0": u0.l2(),
        "linf_u0": u0.linf(),
        "l2_P0": P0.l2(),
        "relaxed": False,
    }

    violations = []
    if abs(mass) > tol["mass"]:
        violations.append(f"|integral of u0| = {abs(mass):.3e} > {tol['mass']:.3e}")
    if abs(p_mass) > tol["mass"]:
        violations.append(f"|integral of P0| = {abs(p_mass):.3e} > {tol['mass']:.3e}")
    if violations:
        if not relax_mass:
            raise InitialDataError(
                "initial data rejected: " + "; ".join(violations),
                mass=mass,
                p_mass=p_mass,
            )
        provenance["relaxed"] = True
        provenance["violations"] = violations

    n_outer = max(1, grid.cell_count // 10)
    outer = np.concatenate([u0.values[:n_outer], u0.values[-n_outer:]])
    if np.any(np.abs(outer) >= tol["support"]):
        warnings.warn(
            "initial data is not negligible on the outer 10% of cells; "
            "the domain truncation is inexact",
            stacklevel=2,
        )
    return InitialData(u0=u0, P0=P0, provenance=provenance)

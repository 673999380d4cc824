"""Solver and verification harness for the Ostrovsky-Hunter equation.

The equation is treated in its integro-differential form: a strictly convex
scalar conservation law driven by the cumulative primitive of the state.
Alongside the finite-volume solver, the package measures every a-priori
estimate the analysis provides: conservation identities, energy balance,
one-sided Lipschitz (Oleinik) bounds, entropy residuals, shock
admissibility, and the adjoint duality pairing behind uniqueness.
"""

from .core import (
    BlowUpError,
    ConfigError,
    Field,
    FluxModel,
    Grid1D,
    InitialData,
    InitialDataError,
    InvalidFluxError,
    OHSolverError,
    SolverConfig,
    validate_flux,
    validate_initial_data,
)
from .evolve import run_to_time, stability_compare, step_ssprk2
from .nonlocal_ops import compute_primitive, elliptic_solve_delta, zero_mean_project

__version__ = "0.1.0"

__all__ = [
    "BlowUpError",
    "ConfigError",
    "Field",
    "FluxModel",
    "Grid1D",
    "InitialData",
    "InitialDataError",
    "InvalidFluxError",
    "OHSolverError",
    "SolverConfig",
    "compute_primitive",
    "elliptic_solve_delta",
    "run_to_time",
    "stability_compare",
    "step_ssprk2",
    "validate_flux",
    "validate_initial_data",
    "zero_mean_project",
    "__version__",
]

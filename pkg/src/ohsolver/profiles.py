"""Initial-data profiles.

Admissible profiles must decay inside the truncated domain and carry zero
mean together with a zero-mean primitive; the workhorse is the second
Gaussian derivative ("hermite bump"), which satisfies both exactly.
"""

import numpy as np

from .core import ConfigError, Field


def zero(grid):
    return Field(np.zeros(grid.cell_count), grid)


def hermite_bump(grid, amplitude=1.0, center=0.0, width=1.0):
    """amplitude * (4 xi^2 - 2) exp(-xi^2), xi = (x - center)/width.

    Both the profile and its primitive -2 amplitude width xi exp(-xi^2)
    integrate to zero over the line.
    """
    xi = (grid.centers - center) / width
    return Field(amplitude * (4.0 * xi**2 - 2.0) * np.exp(-(xi**2)), grid)


def gauss_derivative(grid, amplitude=1.0, center=0.0, width=1.0):
    """amplitude * d/dx exp(-xi^2); zero mean, but its primitive is not."""
    xi = (grid.centers - center) / width
    return Field(-2.0 * amplitude * xi * np.exp(-(xi**2)), grid)


def riemann(grid, left, right, x_jump=0.0, window=1.0):
    """left on [x_jump - window, x_jump), right on [x_jump, x_jump + window)."""
    x = grid.centers
    v = np.zeros(grid.cell_count)
    v[(x >= x_jump - window) & (x < x_jump)] = left
    v[(x >= x_jump) & (x < x_jump + window)] = right
    return Field(v, grid)


def random_zero_mean(grid, seed=0, modes=12, envelope_width=0.55, rough=False):
    """Enveloped random field with exactly zero discrete mean.

    Smooth version: a few random Fourier modes; rough version: white noise.
    The Gaussian envelope keeps the field negligible near the boundary.
    """
    rng = np.random.default_rng(seed)
    x = grid.centers
    L = grid.half_width
    if rough:
        v = rng.standard_normal(grid.cell_count)
    else:
        v = np.zeros(grid.cell_count)
        for k in range(1, modes + 1):
            a, b = rng.standard_normal(2)
            v += (a * np.sin(np.pi * k * x / L) + b * np.cos(np.pi * k * x / L)) / k
    v *= np.exp(-((x / (envelope_width * L)) ** 8))
    v -= np.mean(v)
    return Field(v, grid)


PROFILES = {
    "zero": zero,
    "hermite-bump": hermite_bump,
    "gauss-derivative": gauss_derivative,
    "riemann": riemann,
    "random": random_zero_mean,
}


def build(grid, descriptor):
    """Build a profile from a config descriptor {'profile': name, **params}."""
    params = dict(descriptor)
    name = params.pop("profile", None)
    if name not in PROFILES:
        raise ConfigError(f"unknown initial-data profile {name!r}")
    try:
        return PROFILES[name](grid, **params)
    except TypeError as err:
        raise ConfigError(f"bad parameters for profile {name!r}: {err}") from None

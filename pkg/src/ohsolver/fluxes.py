"""Numerical fluxes for the convex flux and discrete entropy flux pairs."""

import numpy as np
from scipy.integrate import cumulative_simpson

from . import _kernels
from .core import ConfigError, FluxModel

_Q_GRID_POINTS = 16385


def godunov_flux(u_left, u_right, model: FluxModel):
    """Exact Riemann flux for a strictly convex f.

    Rarefaction side (u_left <= u_right): the minimum of f over the interval,
    attained at the sonic point when it lies inside.  Shock side: the larger
    endpoint flux.
    """
    us, fs = model.sonic_point()
    ul = np.atleast_1d(np.asarray(u_left, dtype=float))
    ur = np.atleast_1d(np.asarray(u_right, dtype=float))
    out = _kernels.godunov_sweep(
        np.ascontiguousarray(ul),
        np.ascontiguousarray(ur),
        np.ascontiguousarray(np.asarray(model.f(ul), dtype=float)),
        np.ascontiguousarray(np.asarray(model.f(ur), dtype=float)),
        us,
        fs,
    )
    return float(out[0]) if np.isscalar(u_left) else out


def lax_friedrichs_flux(u_left, u_right, alpha, model: FluxModel):
    """(f(a)+f(b))/2 - (alpha/2)(b-a); alpha must dominate the wave speeds."""
    ul = np.atleast_1d(np.asarray(u_left, dtype=float))
    ur = np.atleast_1d(np.asarray(u_right, dtype=float))
    speed = max(
        float(np.max(np.abs(model.f_prime(ul)))),
        float(np.max(np.abs(model.f_prime(ur)))),
    )
    if alpha < speed * (1.0 - 1e-12):
        raise ConfigError(
            f"lax-friedrichs alpha = {alpha:.6g} below sampled wave speed {speed:.6g}"
        )
    out = _kernels.lax_friedrichs_sweep(
        np.ascontiguousarray(ul),
        np.ascontiguousarray(ur),
        np.ascontiguousarray(np.asarray(model.f(ul), dtype=float)),
        np.ascontiguousarray(np.asarray(model.f(ur), dtype=float)),
        float(alpha),
    )
    return float(out[0]) if np.isscalar(u_left) else out


def wave_speed_bound(u_ext, model):
    """Sampled max |f'| over the current state, used as the LF alpha."""
    return float(np.max(np.abs(model.f_prime(u_ext))))


class EntropyPair:
    """Convex entropy eta with its flux q, q' = f' eta'.

    q is built once by cumulative quadrature of f' eta' on a dense grid over
    the model's state range and evaluated by interpolation; the quadrature
    density keeps the interpolation error well below tol_quad.
    """

    def __init__(self, eta, eta_prime, model, sigma=0.0, name="entropy"):
        self.eta = eta
        self.eta_prime = eta_prime
        self.sigma = float(sigma)
        self.name = name
        lo, hi = model.state_range
        pad = 0.05 * (hi - lo)
        grid = np.linspace(lo - pad, hi + pad, _Q_GRID_POINTS)
        integrand = np.asarray(model.f_prime(grid), dtype=float) * np.asarray(
            eta_prime(grid), dtype=float
        )
        cumulative = cumulative_simpson(integrand, x=grid, initial=0.0)
        # shift so q(0) = 0, matching the normalized convention for f
        q0 = np.interp(0.0, grid, cumulative)
        self._q_grid = grid
        self._q_values = cumulative - q0
        if np.any(np.asarray(self._eta_second_samples(grid)) < -1e-10):
            raise ValueError("entropy is not convex on the state range")

    def _eta_second_samples(self, grid):
        ep = np.asarray(self.eta_prime(grid), dtype=float)
        return np.gradient(ep, grid)

    def q(self, u):
        return np.interp(u, self._q_grid, self._q_values)


def quadratic_entropy(model):
    return EntropyPair(
        eta=lambda u: 0.5 * np.asarray(u, dtype=float) ** 2,
        eta_prime=lambda u: np.asarray(u, dtype=float),
        model=model,
        sigma=0.0,
        name="quadratic",
    )


def kruzkov_entropy(model, k, sigma):
    """C^2 smoothing of |u - k| over a band of half-width sigma.

    The quartic spline matches value, slope, and curvature of |s| at s = +-sigma
    and keeps eta'' >= 0 inside.
    """
    if not sigma > 0.0:
        raise ValueError("sigma must be positive for a C^2 entropy")

    def eta(u):
        s = np.asarray(u, dtype=float) - k
        t = np.clip(s / sigma, -1.0, 1.0)
        smooth = sigma * (0.375 + 0.75 * t**2 - 0.125 * t**4)
        return np.where(np.abs(s) >= sigma, np.abs(s), smooth)

    def eta_prime(u):
        s = np.asarray(u, dtype=float) - k
        t = np.clip(s / sigma, -1.0, 1.0)
        smooth = 1.5 * t - 0.5 * t**3
        return np.where(np.abs(s) >= sigma, np.sign(s), smooth)

    return EntropyPair(
        eta=eta, eta_prime=eta_prime, model=model, sigma=sigma, name=f"kruzkov(k={k:g})"
    )


def _godunov_interface_state(ul, ur, model):
    """State the exact Riemann solution takes at the interface."""
    us, _ = model.sonic_point()
    fl = np.asarray(model.f(ul), dtype=float)
    fr = np.asarray(model.f(ur), dtype=float)
    rarefaction = np.clip(us, ul, ur)
    shock = np.where(fl >= fr, ul, ur)
    return np.where(ul <= ur, rarefaction, shock)


def numerical_entropy_flux(u_left, u_right, pair, model, scheme, alpha=None):
    """Consistent numerical entropy flux matching the chosen scheme.

    Lax-Friedrichs form: (q(a)+q(b))/2 - (alpha/2)(eta(b)-eta(a)), with the
    same alpha the scheme used.  Godunov form: q evaluated at the interface
    state of the exact Riemann solution.
    """
    ul = np.atleast_1d(np.asarray(u_left, dtype=float))
    ur = np.atleast_1d(np.asarray(u_right, dtype=float))
    if scheme == "lax-friedrichs":
        if alpha is None:
            alpha = max(wave_speed_bound(ul, model), wave_speed_bound(ur, model))
        out = 0.5 * (pair.q(ul) + pair.q(ur)) - 0.5 * alpha * (
            np.asarray(pair.eta(ur)) - np.asarray(pair.eta(ul))
        )
    elif scheme == "godunov":
        out = pair.q(_godunov_interface_state(ul, ur, model))
    else:
        raise ConfigError(f"unknown flux scheme {scheme!r}")
    return float(out[0]) if np.isscalar(u_left) else out


def interface_fluxes(u_ext, model, scheme, alpha=None):
    """Fluxes at all interfaces of a ghost-extended state array.

    Returns (fluxes, alpha_used); alpha_used is None for Godunov.
    """
    ul = np.ascontiguousarray(u_ext[:-1])
    ur = np.ascontiguousarray(u_ext[1:])
    fl = np.ascontiguousarray(np.asarray(model.f(ul), dtype=float))
    fr = np.ascontiguousarray(np.asarray(model.f(ur), dtype=float))
    if scheme == "godunov":
        us, fs = model.sonic_point()
        return _kernels.godunov_sweep(ul, ur, fl, fr, us, fs), None
    if scheme == "lax-friedrichs":
        if alpha is None:
            alpha = wave_speed_bound(u_ext, model)
        return _kernels.lax_friedrichs_sweep(ul, ur, fl, fr, float(alpha)), float(alpha)
    raise ConfigError(f"unknown flux scheme {scheme!r}")

"""Reference kernel implementations (numpy/scipy).

These define the semantics; the compiled module in _fast.pyx must agree with
them to rounding error on well-conditioned inputs.
"""

import numpy as np
from scipy.linalg import solve_banded

BACKEND = "python"


def godunov_sweep(ul, ur, ful, fur, u_sonic, f_sonic):
    """Interface fluxes of the exact Riemann solver for a strictly convex flux.

    ul/ur are the left/right cell states at each interface, ful/fur the flux
    evaluated at those states, (u_sonic, f_sonic) the minimizer of f and its
    value.  Rarefaction side (ul <= ur): min of f over [ul, ur]; shock side:
    max(f(ul), f(ur)).
    """
    rarefaction = np.where(
        u_sonic <= ul, ful, np.where(u_sonic >= ur, fur, f_sonic)
    )
    shock = np.maximum(ful, fur)
    return np.where(ul <= ur, rarefaction, shock)


def lax_friedrichs_sweep(ul, ur, ful, fur, alpha):
    return 0.5 * (ful + fur) - 0.5 * alpha * (ur - ul)


def upwind_gradient(w, beta, dx):
    """Upwinded d/dx of w for the transport term +beta * dw/dx.

    beta > 0 moves information leftward in the time-reversed system, so the
    forward difference is the stable choice there; beta < 0 takes the backward
    difference.  Zero ghost cells at both ends.
    """
    wl = np.empty(w.shape[0] + 2, dtype=w.dtype)
    wl[1:-1] = w
    wl[0] = 0.0
    wl[-1] = 0.0
    fwd = (wl[2:] - wl[1:-1]) / dx
    bwd = (wl[1:-1] - wl[:-2]) / dx
    return np.where(beta > 0.0, fwd, bwd)


def tridiag_solve(lower, diag, upper, rhs):
    """Solve the tridiagonal system with sub/main/super diagonals.

    lower has length n-1 (row i couples to i-1), upper length n-1 (row i to
    i+1).  Delegates to LAPACK's banded solver, which pivots.
    """
    n = diag.shape[0]
    ab = np.zeros((3, n))
    ab[0, 1:] = upper
    ab[1, :] = diag
    ab[2, :-1] = lower
    return solve_banded((1, 1), ab, rhs)

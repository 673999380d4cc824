# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for the hot per-step loops.

Semantics match ohsolver._kernels.reference; see that module for contracts.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND = "compiled"


def godunov_sweep(const double[::1] ul, const double[::1] ur, const double[::1] ful,
                  const double[::1] fur, double u_sonic, double f_sonic):
    cdef Py_ssize_t n = ul.shape[0]
    cdef cnp.ndarray[double, ndim=1] out = np.empty(n)
    cdef double[::1] o = out
    cdef Py_ssize_t i
    cdef double a, b, fa, fb
    for i in range(n):
        a = ul[i]; b = ur[i]; fa = ful[i]; fb = fur[i]
        if a <= b:
            if u_sonic <= a:
                o[i] = fa
            elif u_sonic >= b:
                o[i] = fb
            else:
                o[i] = f_sonic
        else:
            o[i] = fa if fa >= fb else fb
    return out


def lax_friedrichs_sweep(const double[::1] ul, const double[::1] ur, const double[::1] ful,
                         const double[::1] fur, double alpha):
    cdef Py_ssize_t n = ul.shape[0]
    cdef cnp.ndarray[double, ndim=1] out = np.empty(n)
    cdef double[::1] o = out
    cdef Py_ssize_t i
    for i in range(n):
        o[i] = 0.5 * (ful[i] + fur[i]) - 0.5 * alpha * (ur[i] - ul[i])
    return out


def upwind_gradient(const double[::1] w, const double[::1] beta, double dx):
    cdef Py_ssize_t n = w.shape[0]
    cdef cnp.ndarray[double, ndim=1] out = np.empty(n)
    cdef double[::1] o = out
    cdef Py_ssize_t i
    cdef double left, right
    for i in range(n):
        left = w[i - 1] if i > 0 else 0.0
        right = w[i + 1] if i < n - 1 else 0.0
        if beta[i] > 0.0:
            o[i] = (right - w[i]) / dx
        else:
            o[i] = (w[i] - left) / dx
    return out


def tridiag_solve(const double[::1] lower, const double[::1] diag, const double[::1] upper,
                  const double[::1] rhs):
    """Tridiagonal solve with partial pivoting (dgtsv-style).

    Pivoting matters because the elliptic operator loses diagonal dominance
    when the regularization is small relative to the mesh.
    """
    cdef Py_ssize_t n = diag.shape[0]
    cdef cnp.ndarray[double, ndim=1] x = np.empty(n)
    cdef double[::1] xv = x
    # working bands: c (sub), d (diag), e (super), f (second super, fill-in)
    cdef cnp.ndarray[double, ndim=1] d = np.array(diag, copy=True)
    cdef cnp.ndarray[double, ndim=1] e = np.zeros(n)
    cdef cnp.ndarray[double, ndim=1] f = np.zeros(n)
    cdef cnp.ndarray[double, ndim=1] b = np.array(rhs, copy=True)
    cdef double[::1] dv = d, ev = e, fv = f, bv = b
    cdef Py_ssize_t i
    cdef double m, t
    if n == 1:
        xv[0] = bv[0] / dv[0]
        return x
    for i in range(n - 1):
        ev[i] = upper[i]
    for i in range(n - 1):
        if abs(lower[i]) > abs(dv[i]):
            # swap row i with row i+1
            t = dv[i]; dv[i] = lower[i]
            m = t / dv[i]
            t = ev[i]; ev[i] = dv[i + 1]
            dv[i + 1] = t - m * dv[i + 1]
            if i < n - 2:
                fv[i] = ev[i + 1]
                ev[i + 1] = -m * ev[i + 1]
            t = bv[i]; bv[i] = bv[i + 1]
            bv[i + 1] = t - m * bv[i + 1]
        else:
            if dv[i] == 0.0:
                raise ZeroDivisionError("singular tridiagonal system")
            m = lower[i] / dv[i]
            dv[i + 1] = dv[i + 1] - m * ev[i]
            bv[i + 1] = bv[i + 1] - m * bv[i]
    if dv[n - 1] == 0.0:
        raise ZeroDivisionError("singular tridiagonal system")
    xv[n - 1] = bv[n - 1] / dv[n - 1]
    if n >= 2:
        xv[n - 2] = (bv[n - 2] - ev[n - 2] * xv[n - 1]) / dv[n - 2]
    for i in range(n - 3, -1, -1):
        xv[i] = (bv[i] - ev[i] * xv[i + 1] - fv[i] * xv[i + 2]) / dv[i]
    return x

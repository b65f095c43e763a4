# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled polynomial evaluation and fixed-step RK4.

Same signatures and results as ``_pykernels``; see that module for the
program layout.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()


cdef inline double _ipow(double x, int e) nogil:
    cdef double r = 1.0
    cdef int k
    if e < 0:
        x = 1.0 / x
        e = -e
    for k in range(e):
        r *= x
    return r


cdef void _eval(const double[::1] coef, const int[:, ::1] exps, const long[::1] offsets,
                const double* xext, int nv, double* out, int ncomp) nogil:
    cdef int comp, t, v, e
    cdef double acc, term
    for comp in range(ncomp):
        acc = 0.0
        for t in range(offsets[comp], offsets[comp + 1]):
            term = coef[t]
            for v in range(nv):
                e = exps[t, v]
                if e != 0:
                    term *= _ipow(xext[v], e)
            acc += term
        out[comp] = acc


def eval_components(const double[::1] coef, const int[:, ::1] exps, const long[::1] offsets,
                    const long[::1] comp_index, const double[::1] xext):
    cdef int ncomp = offsets.shape[0] - 1
    out = np.empty(ncomp)
    cdef double[::1] o = out
    _eval(coef, exps, offsets, &xext[0], xext.shape[0], &o[0], ncomp)
    return out


cdef int _deriv(const double[::1] coef, const int[:, ::1] exps, const long[::1] offsets,
                int n, int m, const double* x, const double* w, bint full7, double guard,
                double* xext, double* comps, double* dx) nogil:
    """Derivative of the state into ``dx``; returns 1 if the point is outside the domain."""
    cdef int ncomp = offsets.shape[0] - 1
    cdef int j, k, nv = n + 1
    cdef double r, acc
    for j in range(n):
        xext[j] = x[j]
    if full7:
        xext[n] = x[n]
    else:
        # relation R is component (m+1)*n; it never involves the constrained variable
        xext[n] = 1.0
        _eval(coef, exps, offsets[(m + 1) * n:(m + 1) * n + 2], xext, nv, &r, 1)
        if r <= guard:
            return 1
        xext[n] = sqrt(r)
    _eval(coef, exps, offsets, xext, nv, comps, ncomp)
    for j in range(n):
        acc = 0.0
        for k in range(m + 1):
            if w[k] != 0.0:
                acc += w[k] * comps[k * n + j]
        dx[j] = acc
    if full7:
        acc = 0.0
        for k in range(m + 1):
            if w[k] != 0.0:
                acc += w[k] * comps[(m + 1) * n + 1 + k]
        dx[n] = acc
    return 0


def rhs(const double[::1] coef, const int[:, ::1] exps, const long[::1] offsets,
        const long[::1] comp_index, int n, int m, const double[::1] x, const double[::1] w,
        bint full7, double guard):
    cdef int dim = n + 1 if full7 else n
    cdef int ncomp = offsets.shape[0] - 1
    out = np.empty(dim)
    cdef double[::1] o = out
    cdef double[::1] xext = np.empty(n + 1)
    cdef double[::1] comps = np.empty(ncomp)
    if _deriv(coef, exps, offsets, n, m, &x[0], &w[0], full7, guard, &xext[0], &comps[0], &o[0]):
        return None
    return out


def rk4(const double[::1] coef, const int[:, ::1] exps, const long[::1] offsets,
        const long[::1] comp_index, int n, int m, const double[::1] x0, const double[:, ::1] W,
        double h, int nsteps, bint full7, double guard):
    """Fixed-step RK4 with piecewise-constant field weights ``W[step]``.

    Returns ``(states, status, steps_done)``; status 0 = completed,
    1 = a stage left the domain while the Euler predictor stayed inside
    (step too large), 2 = the trajectory itself leaves the domain.
    """
    cdef int dim = n + 1 if full7 else n
    cdef int ncomp = offsets.shape[0] - 1
    states = np.zeros((nsteps + 1, dim))
    cdef double[:, ::1] S = states
    cdef double[::1] xext = np.empty(n + 1)
    cdef double[::1] comps = np.empty(ncomp)
    cdef double[::1] k1 = np.empty(dim)
    cdef double[::1] k2 = np.empty(dim)
    cdef double[::1] k3 = np.empty(dim)
    cdef double[::1] k4 = np.empty(dim)
    cdef double[::1] tmp = np.empty(dim)
    cdef double[::1] dummy = np.empty(dim)
    cdef int step, j, status = 0
    cdef double* x
    cdef const double* w
    for j in range(dim):
        S[0, j] = x0[j]
    with nogil:
        for step in range(nsteps):
            x = &S[step, 0]
            w = &W[step, 0]
            if _deriv(coef, exps, offsets, n, m, x, w, full7, guard, &xext[0], &comps[0], &k1[0]):
                status = 2
                break
            for j in range(dim):
                tmp[j] = x[j] + 0.5 * h * k1[j]
            if _deriv(coef, exps, offsets, n, m, &tmp[0], w, full7, guard, &xext[0], &comps[0], &k2[0]):
                status = 1
            if status == 0:
                for j in range(dim):
                    tmp[j] = x[j] + 0.5 * h * k2[j]
                if _deriv(coef, exps, offsets, n, m, &tmp[0], w, full7, guard, &xext[0], &comps[0], &k3[0]):
                    status = 1
            if status == 0:
                for j in range(dim):
                    tmp[j] = x[j] + h * k3[j]
                if _deriv(coef, exps, offsets, n, m, &tmp[0], w, full7, guard, &xext[0], &comps[0], &k4[0]):
                    status = 1
            if status == 1:
                for j in range(dim):
                    tmp[j] = x[j] + h * k1[j]
                if _deriv(coef, exps, offsets, n, m, &tmp[0], w, full7, guard, &xext[0], &comps[0], &dummy[0]):
                    status = 2
                break
            for j in range(dim):
                S[step + 1, j] = x[j] + h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])
    if status:
        return states[:step + 1], status, step
    # a final state outside the domain is reported by the caller's check
    return states, 0, nsteps

"""NumPy reference kernels: polynomial evaluation and fixed-step RK4.

A compiled *program* is a flat list of polynomial components over the
extended point ``xext = (x_1..x_n, c)``:

* components ``k*n + j`` -- component ``j`` of field ``f_k`` (k = 0..m),
* component ``(m+1)*n`` -- the relation ``R`` (``c**2 = R``),
* components ``(m+1)*n + 1 + k`` -- ``dc/dt`` along ``f_k``.

Term ``t`` of component ``comp`` (``offsets[comp] <= t < offsets[comp+1]``)
is ``coef[t] * prod(xext ** exps[t])``; ``comp_index[t] == comp``.
"""
from __future__ import annotations

import math

import numpy as np


def eval_components(coef, exps, offsets, comp_index, xext):
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = coef * np.prod(np.power(xext, exps), axis=1)
    return np.bincount(comp_index, weights=vals, minlength=len(offsets) - 1)


def _relation(coef, exps, offsets, n, m, x):
    lo, hi = offsets[(m + 1) * n], offsets[(m + 1) * n + 1]
    xext = np.append(x[:n], 1.0)
    return float(np.sum(coef[lo:hi] * np.prod(np.power(xext, exps[lo:hi]), axis=1)))


def rhs(coef, exps, offsets, comp_index, n, m, x, w, full7, guard):
    """State derivative for field weights ``w = (w_0, .., w_m)``; None outside the domain."""
    x = np.asarray(x, dtype=float)
    if full7:
        xext = x[: n + 1]
    else:
        r = _relation(coef, exps, offsets, n, m, x)
        if r <= guard:
            return None
        xext = np.append(x[:n], math.sqrt(r))
    comps = eval_components(coef, exps, offsets, comp_index, xext)
    nf = (m + 1) * n
    dx = np.asarray(w) @ comps[:nf].reshape(m + 1, n)
    if full7:
        dc = np.asarray(w) @ comps[nf + 1: nf + 2 + m]
        return np.append(dx, dc)
    return dx


def rk4(coef, exps, offsets, comp_index, n, m, x0, W, h, nsteps, full7, guard):
    """Fixed-step RK4; same contract as the compiled kernel."""
    dim = n + 1 if full7 else n
    states = np.zeros((nsteps + 1, dim))
    states[0] = x0
    args = (coef, exps, offsets, comp_index, n, m)
    for step in range(nsteps):
        x, w = states[step], W[step]
        k1 = rhs(*args, x, w, full7, guard)
        if k1 is None:
            return states[: step + 1], 2, step
        ks = [k1]
        for a in (0.5, 0.5, 1.0):
            k = rhs(*args, x + a * h * ks[-1], w, full7, guard)
            if k is None:
                status = 2 if rhs(*args, x + h * k1, w, full7, guard) is None else 1
                return states[: step + 1], status, step
            ks.append(k)
        k1, k2, k3, k4 = ks
        states[step + 1] = x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return states, 0, nsteps

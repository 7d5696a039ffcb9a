"""Numba kernels for the pseudo-time sweeps (the solver hot path).

The kernels operate on the grid's compact interior representation: an
extended value vector (lattice values followed by boundary-crossing values),
per-arm gather indices, and precomputed stencil weights.  All divisions by
arm lengths happen once at setup; the sweep itself is gathers and fused
multiply-adds.  The x-dependent coefficient of the linear kind is also
precomputed per node, so no transcendentals run inside the sweep.

The numpy evaluators in :mod:`gradmercier.operators` / ``calculus`` are the
reference implementation; tests pin the two paths against each other.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from numba import njit

from .errors import ConfigurationError
from .operators import (KIND_ASYM, KIND_BELLMAN, KIND_LINEAR, KIND_PUCCI_MINUS,
                        KIND_PUCCI_PLUS, KIND_QUAD_TRACE, KIND_TRACE,
                        OperatorSpec)

CODE_TRACE = 0
CODE_LINEAR = 1
CODE_PUCCI_MINUS = 2
CODE_PUCCI_PLUS = 3
CODE_BELLMAN = 4
CODE_ASYM = 5
CODE_QUAD_TRACE = 6

_KIND_CODES = {
    KIND_TRACE: CODE_TRACE,
    KIND_LINEAR: CODE_LINEAR,
    KIND_PUCCI_MINUS: CODE_PUCCI_MINUS,
    KIND_PUCCI_PLUS: CODE_PUCCI_PLUS,
    KIND_BELLMAN: CODE_BELLMAN,
    KIND_QUAD_TRACE: CODE_QUAD_TRACE,
}

STATUS_CONVERGED = 0
STATUS_MAX_ITERS = 1
STATUS_DIVERGED = 2

# Stencil-weight columns (per interior node):
#  0.. 2  gx:  E, W, P
#  3.. 5  gy:  N, S, P
#  6.. 8  xx:  E, W, P
#  9..11  yy:  N, S, P
# 12..14  d1 (NE/SW diagonal second difference): NE, SW, P
# 15..17  d2 (NW/SE):                            NW, SE, P
N_WCOLS = 18


@lru_cache(maxsize=16)
def stencil_weights(grid):
    """(NI, 18) unequal-arm difference weights and (NI, 8) gather indices."""
    fr = grid.arm_frac
    h = grid.h
    W = np.empty((grid.n_interior, N_WCOLS))

    def fill(base, a, b, L, second):
        denom = a * b * (a + b)
        if second:
            W[:, base + 0] = 2.0 * b / (denom * L * L)
            W[:, base + 1] = 2.0 * a / (denom * L * L)
            W[:, base + 2] = -2.0 * (a + b) / (denom * L * L)
        else:
            W[:, base + 0] = b * b / (denom * L)
            W[:, base + 1] = -a * a / (denom * L)
            W[:, base + 2] = (a * a - b * b) / (denom * L)

    sq2h = math.sqrt(2.0) * h
    fill(0, fr[0], fr[1], h, second=False)
    fill(3, fr[2], fr[3], h, second=False)
    fill(6, fr[0], fr[1], h, second=True)
    fill(9, fr[2], fr[3], h, second=True)
    fill(12, fr[4], fr[5], sq2h, second=True)
    fill(15, fr[6], fr[7], sq2h, second=True)
    idxT = np.ascontiguousarray(grid.arm_idx.T)
    return np.ascontiguousarray(W), idxT


def pack_operator(spec: OperatorSpec, interior_x, interior_y):
    """Flatten a spec into kernel arguments.

    Returns ``(kind, rec, lam, Lam, dmat, alphas, kappa, rho0, c0, b0, coef)``
    where ``coef`` is the per-node x-modulation of the linear kind and
    ``lam/Lam`` are the recession part's constants (used by the Pucci closed
    forms), not the widened SC envelope.
    """
    if spec.kind == KIND_ASYM:
        base = spec.recession_part
        kind = CODE_ASYM
    else:
        base = spec
        kind = _KIND_CODES[spec.kind]
    rec = _KIND_CODES[base.kind]
    ell = base.ellipticity
    if base.kind == KIND_LINEAR and base.coef_eps != 0.0:
        coef = 1.0 + base.coef_eps * np.sin(
            2.0 * math.pi * (base.coef_kx * interior_x + base.coef_ky * interior_y))
    else:
        coef = np.ones(interior_x.size)
    alphas = (np.asarray(base.bellman_mats, dtype=np.float64).reshape(-1, 3)
              if base.bellman_mats else np.zeros((0, 3)))
    dmat = np.asarray(base.coef_mat, dtype=np.float64)
    return (kind, rec, float(ell.lam), float(ell.Lam), dmat, alphas,
            float(spec.kappa), float(spec.rho0), float(spec.c0), float(spec.b0),
            np.ascontiguousarray(coef))


@njit(cache=True, inline="always")
def _f_scalar(kind, rec, lam, Lam, dmat, alphas, kappa, rho0, c0, b0,
              m11, m12, m22, gx, gy, uv, coef):
    code = rec if kind == CODE_ASYM else kind
    if code == CODE_TRACE:
        base = m11 + m22
    elif code == CODE_LINEAR:
        base = coef * (dmat[0] * m11 + 2.0 * dmat[1] * m12 + dmat[2] * m22)
    elif code == CODE_PUCCI_MINUS or code == CODE_PUCCI_PLUS:
        mean = 0.5 * (m11 + m22)
        dev = math.hypot(0.5 * (m11 - m22), m12)
        e1 = mean - dev
        e2 = mean + dev
        if code == CODE_PUCCI_MINUS:
            base = (lam * e1 if e1 > 0.0 else Lam * e1) \
                + (lam * e2 if e2 > 0.0 else Lam * e2)
        else:
            base = (Lam * e1 if e1 > 0.0 else lam * e1) \
                + (Lam * e2 if e2 > 0.0 else lam * e2)
    elif code == CODE_BELLMAN:
        base = -1e300
        for k in range(alphas.shape[0]):
            v = alphas[k, 0] * m11 + 2.0 * alphas[k, 1] * m12 + alphas[k, 2] * m22
            if v > base:
                base = v
    else:
        t = m11 + m22
        base = t * t
    if kind == CODE_ASYM:
        nrm = math.sqrt(m11 * m11 + 2.0 * m12 * m12 + m22 * m22)
        base += kappa * math.atan(nrm) * rho0 - c0 * uv + b0 * math.hypot(gx, gy)
    return base


@njit(cache=True)
def residual_pass(ext, int_idx, idxT, W, rhs,
                  kind, rec, lam, Lam, dmat, alphas, kappa, rho0, c0, b0, coef,
                  out):
    """R = F(D^2_h u, D_h u, u, x) - rhs over the compact interior; returns sup|R|."""
    resmax = 0.0
    for i in range(int_idx.size):
        up = ext[int_idx[i]]
        ue = ext[idxT[i, 0]]
        uw = ext[idxT[i, 1]]
        un = ext[idxT[i, 2]]
        us = ext[idxT[i, 3]]
        m11 = W[i, 6] * ue + W[i, 7] * uw + W[i, 8] * up
        m22 = W[i, 9] * un + W[i, 10] * us + W[i, 11] * up
        if kind == CODE_TRACE:
            r = m11 + m22 - rhs[i]
        else:
            une = ext[idxT[i, 4]]
            usw = ext[idxT[i, 5]]
            unw = ext[idxT[i, 6]]
            use = ext[idxT[i, 7]]
            gx = W[i, 0] * ue + W[i, 1] * uw + W[i, 2] * up
            gy = W[i, 3] * un + W[i, 4] * us + W[i, 5] * up
            d1 = W[i, 12] * une + W[i, 13] * usw + W[i, 14] * up
            d2 = W[i, 15] * unw + W[i, 16] * use + W[i, 17] * up
            m12 = 0.5 * (d1 - d2)
            r = _f_scalar(kind, rec, lam, Lam, dmat, alphas, kappa, rho0,
                          c0, b0, m11, m12, m22, gx, gy, up, coef[i]) - rhs[i]
        out[i] = r
        a = abs(r)
        if a > resmax:
            resmax = a
    return resmax


@njit(cache=True)
def pseudo_time_loop(ext, int_idx, idxT, W, rhs, tau,
                     kind, rec, lam, Lam, dmat, alphas, kappa, rho0, c0, b0,
                     coef, tol, max_iters, div_cap):
    """Damped explicit iteration u <- u + tau_i * R_i until sup|R| <= tol.

    Jacobi form: every sweep reads the previous iterate.  Returns
    ``(status, iters, history)`` with the converged state left in ``ext``.
    """
    ni = int_idx.size
    R = np.empty(ni)
    hist = np.empty(max_iters)
    status = STATUS_MAX_ITERS
    it = 0
    while it < max_iters:
        resmax = residual_pass(ext, int_idx, idxT, W, rhs, kind, rec, lam, Lam,
                               dmat, alphas, kappa, rho0, c0, b0, coef, R)
        hist[it] = resmax
        it += 1
        if not np.isfinite(resmax) or resmax > div_cap:
            status = STATUS_DIVERGED
            break
        if resmax <= tol:
            status = STATUS_CONVERGED
            break
        for i in range(ni):
            ext[int_idx[i]] += tau[i] * R[i]
    return status, it, hist[:it].copy()


def kernel_args(spec: OperatorSpec, grid):
    """Arm tables + packed operator for the kernels, as positional args."""
    if spec.kind == KIND_QUAD_TRACE:
        raise ConfigurationError("the quadratic probe is not a solvable operator")
    packed = pack_operator(spec, grid.interior_x, grid.interior_y)
    W, idxT = stencil_weights(grid)
    return (np.ascontiguousarray(grid.interior_idx), idxT, W), packed

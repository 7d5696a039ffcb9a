"""Closed family of uniformly elliptic operators F(M, p, r, x) in dimension 2.

The family:

* ``trace``        -- F = tr(M), the Laplacian case (lam = Lam = 1).
* ``linear``       -- F = A(x):M with A(x) = (1 + eps*sin(2*pi*(kx*x + ky*y))) * D
                      for a constant SPD matrix D; spectrum(A) stays in [lam, Lam].
* ``pucci_minus`` / ``pucci_plus`` -- the extremal operators themselves.
* ``bellman``      -- max over a finite set of constant SPD matrices A_a of A_a:M
                      (convex in M).
* ``asym_convex``  -- F = F*(M, x) + kappa*atan(||M||_F)*rho0 - c0*r + b0*|p|
                      where F* is one of the kinds above.  The perturbation is
                      bounded by kappa*pi/2, so F* is the scaling (recession)
                      limit of F at rate O(mu).

A deliberately broken ``quad_trace_probe`` (F = tr(M)^2) is provided for
exercising the structure-condition sampler; it is not part of the family.

All evaluators are closed-form and accept numpy arrays componentwise, so they
vectorize over grid nodes and over random sample batches alike.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .errors import ConfigurationError, DiagnosticError
from .grid import DomainGrid

KIND_TRACE = "trace"
KIND_LINEAR = "linear"
KIND_PUCCI_MINUS = "pucci_minus"
KIND_PUCCI_PLUS = "pucci_plus"
KIND_BELLMAN = "bellman"
KIND_ASYM = "asym_convex"
KIND_QUAD_TRACE = "quad_trace_probe"

_HOMOGENEOUS_KINDS = (KIND_TRACE, KIND_LINEAR, KIND_PUCCI_MINUS,
                      KIND_PUCCI_PLUS, KIND_BELLMAN)


class SymMat2(NamedTuple):
    """2x2 symmetric matrix; entries may be scalars or matching arrays."""

    m11: object
    m12: object
    m22: object

    @staticmethod
    def diag(a, b) -> "SymMat2":
        return SymMat2(a, np.zeros_like(np.asarray(a, dtype=float)) + 0.0, b)

    @staticmethod
    def identity() -> "SymMat2":
        return SymMat2(1.0, 0.0, 1.0)

    def eigenvalues(self):
        """Closed-form eigenvalue pair (e_min, e_max)."""
        mean = 0.5 * (np.asarray(self.m11) + np.asarray(self.m22))
        dev = np.hypot(0.5 * (np.asarray(self.m11) - np.asarray(self.m22)),
                       np.asarray(self.m12))
        return mean - dev, mean + dev

    def frobenius(self):
        m11, m12, m22 = (np.asarray(v, dtype=float) for v in self)
        return np.sqrt(m11 * m11 + 2.0 * m12 * m12 + m22 * m22)

    def __add__(self, other):
        return SymMat2(self.m11 + other.m11, self.m12 + other.m12,
                       self.m22 + other.m22)

    def __sub__(self, other):
        return SymMat2(self.m11 - other.m11, self.m12 - other.m12,
                       self.m22 - other.m22)

    def scaled(self, c) -> "SymMat2":
        return SymMat2(c * self.m11, c * self.m12, c * self.m22)


@dataclass(frozen=True)
class Ellipticity:
    lam: float
    Lam: float
    gamma: float = 0.0
    omega: float = 0.0

    def __post_init__(self):
        if not (0.0 < self.lam <= self.Lam):
            raise ConfigurationError(f"need 0 < lam <= Lam, got ({self.lam}, {self.Lam})")
        if self.gamma < 0.0 or self.omega < 0.0:
            raise ConfigurationError("gamma and omega must be nonnegative")


def pucci_minus(M: SymMat2, ell: Ellipticity):
    """M^-(M) = lam * sum(e_i > 0) + Lam * sum(e_i < 0)."""
    e1, e2 = M.eigenvalues()
    return (ell.lam * np.maximum(e1, 0.0) + ell.Lam * np.minimum(e1, 0.0)
            + ell.lam * np.maximum(e2, 0.0) + ell.Lam * np.minimum(e2, 0.0))


def pucci_plus(M: SymMat2, ell: Ellipticity):
    """M^+(M) = Lam * sum(e_i > 0) + lam * sum(e_i < 0)."""
    e1, e2 = M.eigenvalues()
    return (ell.Lam * np.maximum(e1, 0.0) + ell.lam * np.minimum(e1, 0.0)
            + ell.Lam * np.maximum(e2, 0.0) + ell.lam * np.minimum(e2, 0.0))


@dataclass(frozen=True)
class OperatorSpec:
    """One member of the closed operator family (see module docstring)."""

    kind: str
    ellipticity: Ellipticity
    coef_eps: float = 0.0            # linear kind: modulation amplitude
    coef_kx: float = 1.0             # linear kind: modulation wave vector
    coef_ky: float = 0.0
    coef_mat: tuple = (1.0, 0.0, 1.0)   # linear kind: constant matrix D
    bellman_mats: tuple = ()         # bellman kind: ((a11, a12, a22), ...)
    recession_part: "OperatorSpec | None" = None   # asym kind: the convex F*
    kappa: float = 0.0               # asym kind: atan perturbation size
    rho0: float = 1.0                # asym kind: |rho0| <= 1
    c0: float = 0.0                  # asym kind: zeroth-order coefficient
    b0: float = 0.0                  # asym kind: gradient coefficient

    @property
    def is_homogeneous(self) -> bool:
        return self.kind in _HOMOGENEOUS_KINDS

    def recession(self) -> "OperatorSpec":
        """The recession operator F* (the spec itself for 1-homogeneous kinds)."""
        if self.is_homogeneous:
            return self
        if self.kind == KIND_ASYM:
            return self.recession_part
        raise ConfigurationError(f"kind {self.kind!r} has no recession operator")


# -- factories --------------------------------------------------------------

def trace_operator() -> OperatorSpec:
    return OperatorSpec(KIND_TRACE, Ellipticity(1.0, 1.0))


def pucci_operator(lam: float, Lam: float, plus: bool = False) -> OperatorSpec:
    kind = KIND_PUCCI_PLUS if plus else KIND_PUCCI_MINUS
    return OperatorSpec(kind, Ellipticity(lam, Lam))


def linear_operator(eps: float = 0.0, kx: float = 1.0, ky: float = 0.0,
                    mat: Sequence[float] = (1.0, 0.0, 1.0)) -> OperatorSpec:
    """F = (1 + eps*sin(2*pi*(kx*x + ky*y))) * (D : M)."""
    if abs(eps) >= 1.0:
        raise ConfigurationError("linear kind needs |eps| < 1 to stay elliptic")
    d11, d12, d22 = (float(v) for v in mat)
    e1, e2 = SymMat2(d11, d12, d22).eigenvalues()
    if e1 <= 0.0:
        raise ConfigurationError("linear kind needs an SPD coefficient matrix")
    ell = Ellipticity((1.0 - abs(eps)) * float(e1), (1.0 + abs(eps)) * float(e2))
    return OperatorSpec(KIND_LINEAR, ell, coef_eps=float(eps), coef_kx=float(kx),
                        coef_ky=float(ky), coef_mat=(d11, d12, d22))


def bellman_operator(mats: Sequence[Sequence[float]]) -> OperatorSpec:
    """F = max_a (A_a : M) over a finite list of constant SPD matrices."""
    mats = tuple(tuple(float(v) for v in m) for m in mats)
    if not mats:
        raise ConfigurationError("bellman kind needs at least one matrix")
    lo, hi = np.inf, -np.inf
    for m in mats:
        e1, e2 = SymMat2(*m).eigenvalues()
        lo, hi = min(lo, float(e1)), max(hi, float(e2))
    if lo <= 0.0:
        raise ConfigurationError("bellman matrices must all be SPD")
    return OperatorSpec(KIND_BELLMAN, Ellipticity(lo, hi), bellman_mats=mats)


def asym_convex_operator(recession: OperatorSpec, kappa: float, rho0: float = 1.0,
                         c0: float = 0.0, b0: float = 0.0) -> OperatorSpec:
    """F = F* + kappa*atan(||M||_F)*rho0 - c0*r + b0*|p|.

    The atan term is kappa-Lipschitz in the Frobenius norm, which widens the
    Pucci envelope: the combined operator satisfies the two-sided structure
    inequality with constants (lam* - kappa, Lam* + kappa).  That forces
    kappa < lam*.
    """
    if not recession.is_homogeneous:
        raise ConfigurationError("recession part must be a 1-homogeneous kind")
    if kappa < 0.0:
        raise ConfigurationError("kappa must be nonnegative")
    rec_ell = recession.ellipticity
    if kappa >= rec_ell.lam:
        raise ConfigurationError(
            f"need kappa < lam* = {rec_ell.lam} for uniform ellipticity")
    if abs(rho0) > 1.0:
        raise ConfigurationError("need |rho0| <= 1")
    if c0 < 0.0:
        raise ConfigurationError("need c0 >= 0 (F non-increasing in r)")
    ell = Ellipticity(rec_ell.lam - kappa, rec_ell.Lam + kappa,
                      gamma=abs(b0), omega=c0)
    return OperatorSpec(KIND_ASYM, ell, recession_part=recession,
                        coef_eps=recession.coef_eps, coef_kx=recession.coef_kx,
                        coef_ky=recession.coef_ky, coef_mat=recession.coef_mat,
                        bellman_mats=recession.bellman_mats,
                        kappa=float(kappa), rho0=float(rho0), c0=float(c0),
                        b0=float(b0))


def quad_trace_probe() -> OperatorSpec:
    """Adversarial F = tr(M)^2 for the SC sampler; not uniformly elliptic."""
    return OperatorSpec(KIND_QUAD_TRACE, Ellipticity(1.0, 1.0))


# -- evaluation --------------------------------------------------------------

def _coef_factor(spec: OperatorSpec, x, y):
    if spec.coef_eps == 0.0:
        return 1.0
    return 1.0 + spec.coef_eps * np.sin(
        2.0 * math.pi * (spec.coef_kx * np.asarray(x) + spec.coef_ky * np.asarray(y)))


def _second_order(spec: OperatorSpec, M: SymMat2, x, y):
    kind = spec.kind
    if kind == KIND_TRACE:
        return np.asarray(M.m11) + np.asarray(M.m22)
    if kind == KIND_LINEAR:
        d11, d12, d22 = spec.coef_mat
        lin = d11 * np.asarray(M.m11) + 2.0 * d12 * np.asarray(M.m12) \
            + d22 * np.asarray(M.m22)
        return _coef_factor(spec, x, y) * lin
    if kind == KIND_PUCCI_MINUS:
        return pucci_minus(M, spec.ellipticity)
    if kind == KIND_PUCCI_PLUS:
        return pucci_plus(M, spec.ellipticity)
    if kind == KIND_BELLMAN:
        out = None
        for a11, a12, a22 in spec.bellman_mats:
            v = a11 * np.asarray(M.m11) + 2.0 * a12 * np.asarray(M.m12) \
                + a22 * np.asarray(M.m22)
            out = v if out is None else np.maximum(out, v)
        return out
    if kind == KIND_QUAD_TRACE:
        t = np.asarray(M.m11) + np.asarray(M.m22)
        return t * t
    raise ConfigurationError(f"unknown operator kind {kind!r}")


def eval_operator(spec: OperatorSpec, M: SymMat2, p=(0.0, 0.0), r=0.0, x=(0.0, 0.0)):
    """Evaluate F(M, p, r, x); all arguments broadcast componentwise."""
    xx, yy = x
    if spec.kind == KIND_ASYM:
        base = _second_order(spec.recession_part, M, xx, yy)
        val = base + spec.kappa * np.arctan(M.frobenius()) * spec.rho0
        if spec.c0:
            val = val - spec.c0 * np.asarray(r)
        if spec.b0:
            val = val + spec.b0 * np.hypot(np.asarray(p[0]), np.asarray(p[1]))
        return val
    return _second_order(spec, M, xx, yy)


def recession_eval(spec: OperatorSpec, M: SymMat2, x=(0.0, 0.0),
                   mu_list: Sequence[float] = (1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6)):
    """Scaling limit F_mu(M, 0, 0, x) = mu * F(M/mu, 0, 0, x) along a mu schedule.

    Returns ``(value_at_last_mu, trace)``.  The trace must be Cauchy at rate
    kappa*pi/2*max(mu, mu'); a violation (an operator outside the family's
    guarantee, e.g. the quadratic probe) raises :class:`DiagnosticError`.
    """
    mu_arr = np.asarray(list(mu_list), dtype=float)
    if mu_arr.size == 0 or np.any(mu_arr <= 0.0):
        raise ConfigurationError("mu_list must be positive")
    if np.any(np.diff(mu_arr) >= 0.0):
        raise ConfigurationError("mu_list must be strictly decreasing")
    if mu_arr[-1] > 1e-6:
        raise ConfigurationError("mu_list must reach 1e-6 or below")
    trace = [float(np.asarray(
        mu * eval_operator(spec, M.scaled(1.0 / mu), (0.0, 0.0), 0.0, x)
    )) for mu in mu_arr]
    kap = spec.kappa * abs(spec.rho0) if spec.kind == KIND_ASYM else 0.0
    scale = 1.0 + max(abs(v) for v in trace)
    for i in range(len(trace) - 1):
        bound = kap * math.pi / 2.0 * mu_arr[i] + 1e-9 * scale
        if abs(trace[i] - trace[i + 1]) > bound:
            raise DiagnosticError(
                f"recession trace is not Cauchy: |F_mu - F_mu'| = "
                f"{abs(trace[i] - trace[i+1]):.3e} > {bound:.3e} at mu = {mu_arr[i]:g}")
    return trace[-1], trace


# -- structure condition sampler ---------------------------------------------

@dataclass
class SCReport:
    kind: str
    samples: int
    violations: int
    worst_margin: float
    worst_witness: dict | None = field(default=None, repr=False)

    @property
    def passed(self) -> bool:
        return self.violations == 0


def _rand_sym(rng, size, lo=-10.0, hi=10.0) -> SymMat2:
    return SymMat2(rng.uniform(lo, hi, size), rng.uniform(lo, hi, size),
                   rng.uniform(lo, hi, size))


def check_structure_condition(spec: OperatorSpec, samples: int = 10_000,
                              seed: int = 0) -> SCReport:
    """Sample the two-sided structure inequality

        M^-(M-N) - gamma|p-q| - omega|r-s| <= F(M,p,r,x) - F(N,q,s,x)
                                           <= M^+(M-N) + gamma|p-q| + omega|r-s|

    at random witnesses with matrix entries in [-10, 10].  Violations beyond a
    1e-9 relative tolerance are counted; the worst witness is reported.
    """
    if samples < 1:
        raise ConfigurationError("need samples >= 1")
    rng = np.random.default_rng(seed)
    ell = spec.ellipticity
    M = _rand_sym(rng, samples)
    N = _rand_sym(rng, samples)
    p = rng.uniform(-10, 10, (2, samples))
    q = rng.uniform(-10, 10, (2, samples))
    r = rng.uniform(-10, 10, samples)
    s = rng.uniform(-10, 10, samples)
    x = rng.uniform(0.0, 1.0, (2, samples))

    dF = (np.asarray(eval_operator(spec, M, (p[0], p[1]), r, (x[0], x[1])))
          - np.asarray(eval_operator(spec, N, (q[0], q[1]), s, (x[0], x[1]))))
    D = M - N
    low_terms = ell.gamma * np.hypot(p[0] - q[0], p[1] - q[1]) \
        + ell.omega * np.abs(r - s)
    up = pucci_plus(D, ell) + low_terms
    lo = pucci_minus(D, ell) - low_terms
    scale = 1.0 + np.abs(dF) + np.abs(up) + np.abs(lo)
    tol = 1e-9 * scale
    margin = np.minimum(up - dF, dF - lo)
    bad = margin < -tol
    worst = int(np.argmin(margin))
    witness = None
    if bad.any():
        witness = {
            "M": (float(M.m11[worst]), float(M.m12[worst]), float(M.m22[worst])),
            "N": (float(N.m11[worst]), float(N.m12[worst]), float(N.m22[worst])),
            "p": (float(p[0, worst]), float(p[1, worst])),
            "q": (float(q[0, worst]), float(q[1, worst])),
            "r": float(r[worst]), "s": float(s[worst]),
            "x": (float(x[0, worst]), float(x[1, worst])),
            "margin": float(margin[worst]),
        }
    return SCReport(kind=spec.kind, samples=samples,
                    violations=int(bad.sum()),
                    worst_margin=float(margin[worst]),
                    worst_witness=witness)


# -- oscillation measure and smallness check ----------------------------------

def oscillation_beta(spec: OperatorSpec, x, x0, matrix_samples: int = 64,
                     scale_list: Sequence[float] = (0.1, 1.0, 10.0, 100.0),
                     seed: int = 0) -> float:
    """Measured oscillation of F* between the points x and x0:

        beta(x, x0) = sup_X |F*(X, x) - F*(X, x0)| / (||X||_F + 1).

    The sup is lower-bounded by sampling symmetric X at the Frobenius norms in
    ``scale_list``; for the ``linear`` kind the exact value ||A(x) - A(x0)||_F
    (the sup over X along X ~ A(x) - A(x0)) is also used.
    """
    rec = spec.recession()
    x = np.asarray(x, dtype=float)
    x0 = np.asarray(x0, dtype=float)
    best = 0.0
    if rec.kind == KIND_LINEAR:
        d11, d12, d22 = rec.coef_mat
        da = float(_coef_factor(rec, x[0], x[1]) - _coef_factor(rec, x0[0], x0[1]))
        best = abs(da) * math.sqrt(d11 * d11 + 2.0 * d12 * d12 + d22 * d22)
    elif rec.coef_eps == 0.0:
        return 0.0          # x-independent kinds oscillate not at all
    rng = np.random.default_rng(seed)
    for s in scale_list:
        X = _rand_sym(rng, matrix_samples, -1.0, 1.0)
        nrm = X.frobenius()
        nrm = np.where(nrm == 0.0, 1.0, nrm)
        X = SymMat2(X.m11 * s / nrm, X.m12 * s / nrm, X.m22 * s / nrm)
        va = np.asarray(eval_operator(rec, X, x=(x[0], x[1])))
        vb = np.asarray(eval_operator(rec, X, x=(x0[0], x0[1])))
        ratio = np.abs(va - vb) / (X.frobenius() + 1.0)
        best = max(best, float(ratio.max()))
    return best


@dataclass
class SmallnessReport:
    measured: float
    bound: float
    radius: float
    nodes: int

    @property
    def passed(self) -> bool:
        return self.measured <= self.bound


def check_smallness(spec: OperatorSpec, grid: DomainGrid, x0, r: float, p: float,
                    theta0: float, alpha0: float, matrix_samples: int = 32,
                    scale_list: Sequence[float] = (0.1, 1.0, 10.0, 100.0),
                    seed: int = 0) -> SmallnessReport:
    """Discrete check of (avg_{B_r(x0) cap Omega} beta^p)^(1/p) <= theta0 * r^alpha0."""
    if not (0.0 < r < 1.0):
        raise ConfigurationError("need r in (0, 1)")
    if r < grid.h:
        raise ConfigurationError(f"ball radius {r} below grid spacing {grid.h}")
    if p <= 2.0:
        raise ConfigurationError("need p > d = 2")
    x0 = np.asarray(x0, dtype=float)
    dist = np.hypot(grid.interior_x - x0[0], grid.interior_y - x0[1])
    inside = dist <= r
    if not inside.any():
        raise ConfigurationError(f"ball of radius {r} contains no interior nodes")
    xs = grid.interior_x[inside]
    ys = grid.interior_y[inside]
    w = grid.cell_measure.ravel()[grid.interior_idx][inside]
    rec = spec.recession()
    if rec.kind == KIND_LINEAR:
        d11, d12, d22 = rec.coef_mat
        da = _coef_factor(rec, xs, ys) - _coef_factor(rec, x0[0], x0[1])
        betas = np.abs(da) * math.sqrt(d11 ** 2 + 2.0 * d12 ** 2 + d22 ** 2)
    elif rec.coef_eps == 0.0:
        betas = np.zeros(xs.size)
    else:
        betas = np.array([
            oscillation_beta(spec, (xi, yi), x0, matrix_samples, scale_list, seed)
            for xi, yi in zip(xs, ys)
        ])
    measured = float((np.sum(betas ** p * w) / w.sum()) ** (1.0 / p))
    return SmallnessReport(measured=measured, bound=float(theta0 * r ** alpha0),
                           radius=float(r), nodes=int(inside.sum()))

"""Discrete norms and regularity functionals.

These are measurement tools, not estimates: the p-BMO seminorm scans every
grid-centered ball with dyadic radii, the Hoelder quotient scans node pairs
(exhaustively on coarse grids, sampled with two independent seeds on fine
ones), and the a-priori ratios divide a solution's norms by the data norms
that bound them, so grid-refinement studies can watch the implied constants.

Ball averages are weighted by cell measures, which also clips boundary balls
against the domain; the sup in the seminorm ranges over balls fully inside
the domain by default (the clipped variant is available too, since the
definition's conventions differ between the sup and the mean).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .calculus import derivatives, lip_seminorm
from .errors import ConfigurationError
from .grid import DomainGrid, DomainShape, ScalarField

FULL_PAIR_LIMIT = 65          # n up to this: exhaustive Hoelder pair scan


def _interior_compact(field: ScalarField):
    g = field.grid
    return field.values.ravel()[g.interior_idx], \
        g.cell_measure.ravel()[g.interior_idx]


def lp_norm(v: ScalarField, p: float) -> float:
    """(sum |v|^p * cell_measure)^(1/p) over interior nodes."""
    if p < 1.0:
        raise ConfigurationError("need p >= 1")
    vals, m = _interior_compact(v)
    return float((np.abs(vals) ** p * m).sum() ** (1.0 / p))


def w2p_norm(u: ScalarField, p: float) -> float:
    """|u|_p + |Du|_p + |D^2 u|_p with the discrete derivatives (p > 2)."""
    if p <= 2.0:
        raise ConfigurationError("need p > d = 2")
    vals, m = _interior_compact(u)
    der = derivatives(u)
    t0 = (np.abs(vals) ** p * m).sum() ** (1.0 / p)
    t1 = (der.grad_norm ** p * m).sum() ** (1.0 / p)
    t2 = (der.hess_frobenius ** p * m).sum() ** (1.0 / p)
    return float(t0 + t1 + t2)


def c01_norm(u: ScalarField) -> float:
    """Discrete C^{0,1} norm: sup |u| + Lipschitz seminorm."""
    vals, _ = _interior_compact(u)
    return float(np.abs(vals).max()) + lip_seminorm(u)


# ---------------------------------------------------------------------------
# p-BMO seminorm
# ---------------------------------------------------------------------------

def default_radii(grid: DomainGrid) -> tuple:
    """Dyadic radii {2h, 4h, ...} up to 1/4."""
    out = []
    r = 2.0 * grid.h
    while r <= 0.25 + 1e-12:
        out.append(r)
        r *= 2.0
    if not out:
        raise ConfigurationError("grid too coarse for any p-BMO radius")
    return tuple(out)


def _ball_offsets(k: float):
    ki = int(math.floor(k))
    dy, dx = np.mgrid[-ki:ki + 1, -ki:ki + 1]
    keep = (dx * dx + dy * dy) <= k * k + 1e-12
    return list(zip(dy[keep].ravel().tolist(), dx[keep].ravel().tolist()))


def _shifted_sum(acc, Q, dy, dx):
    """acc[y, x] += Q[y + dy, x + dx] with zero padding outside."""
    ny, nx = acc.shape
    ys = slice(max(0, dy), ny + min(0, dy))
    xs = slice(max(0, dx), nx + min(0, dx))
    yd = slice(max(0, -dy), ny + min(0, -dy))
    xd = slice(max(0, -dx), nx + min(0, -dx))
    acc[yd, xd] += Q[ys, xs]


def _interior_ball_mask(grid: DomainGrid, rho: float) -> NDArray:
    xg, yg = grid.meshgrid()
    if grid.shape is DomainShape.UNIT_DISK:
        fits = np.hypot(xg, yg) <= 1.0 - rho + 1e-12
    else:
        fits = np.minimum.reduce([xg, 1.0 - xg, yg, 1.0 - yg]) >= rho - 1e-12
    return fits & grid.interior_mask


def pbmo_seminorm(values, grid: DomainGrid, p: float = 1.0,
                  rho_set=None, variant: str = "interior",
                  channel_weights=None) -> float:
    """sup over balls of (avg_ball |v - mean_ball|^p)^(1/p), measure-weighted.

    ``values`` is a (ny, nx) array or a channel stack (c, ny, nx); channel
    stacks are measured in the weighted Frobenius deviation (weights default
    to (1, 2, 1), the symmetric-matrix convention for (m11, m12, m22)).
    ``variant`` "interior" restricts the sup to balls contained in the
    domain; "clipped" lets every interior-centered ball count, averaged over
    its intersection with the domain.
    """
    if p < 1.0:
        raise ConfigurationError("need p >= 1")
    if variant not in ("interior", "clipped"):
        raise ConfigurationError("variant must be 'interior' or 'clipped'")
    V = np.asarray(values, dtype=float)
    if V.ndim == 2:
        V = V[None, :, :]
    nc = V.shape[0]
    if channel_weights is None:
        channel_weights = (1.0, 2.0, 1.0) if nc == 3 else (1.0,) * nc
    w_c = np.asarray(channel_weights, dtype=float)
    radii = default_radii(grid) if rho_set is None else tuple(rho_set)
    for rho in radii:
        if rho < 2.0 * grid.h - 1e-12 or rho > 1.0 + 1e-12:
            raise ConfigurationError(f"radius {rho} outside [2h, diam/2]")

    m = grid.cell_measure
    Vm = np.where(m > 0.0, np.nan_to_num(V) * m, 0.0)
    best = 0.0
    half_p = p / 2.0
    for rho in radii:
        k = rho / grid.h
        offsets = _ball_offsets(k)
        msum = np.zeros_like(m)
        vsum = np.zeros_like(Vm)
        for dy, dx in offsets:
            _shifted_sum(msum, m, dy, dx)
            for c in range(nc):
                _shifted_sum(vsum[c], Vm[c], dy, dx)
        centers = _interior_ball_mask(grid, rho) if variant == "interior" \
            else grid.interior_mask
        centers = centers & (msum > 0.0)
        if not centers.any():
            continue
        mean = np.where(msum > 0.0, vsum / msum, 0.0)
        acc = np.zeros_like(m)
        for dy, dx in offsets:
            dev2 = np.zeros_like(m)
            ny, nx = m.shape
            ys = slice(max(0, dy), ny + min(0, dy))
            xs = slice(max(0, dx), nx + min(0, dx))
            yd = slice(max(0, -dy), ny + min(0, -dy))
            xd = slice(max(0, -dx), nx + min(0, -dx))
            for c in range(nc):
                d = np.zeros_like(m)
                d[yd, xd] = np.nan_to_num(V[c])[ys, xs] - mean[c][yd, xd]
                dev2 += w_c[c] * d * d
            wsh = np.zeros_like(m)
            wsh[yd, xd] = m[ys, xs]
            acc += wsh * dev2 ** half_p
        vals = (acc[centers] / msum[centers]) ** (1.0 / p)
        vmax = float(vals.max())
        if vmax > best:
            best = vmax
    return best


def pbmo_of_field(v: ScalarField, p: float = 1.0, rho_set=None,
                  variant: str = "interior") -> float:
    vals = np.where(v.grid.interior_mask, v.values, 0.0)
    return pbmo_seminorm(vals, v.grid, p, rho_set, variant)


def pbmo_of_hessian(u: ScalarField, p: float = 1.0, rho_set=None,
                    variant: str = "interior") -> float:
    """[D^2 u]_{p-BMO} with the Frobenius deviation on (m11, m12, m22)."""
    g = u.grid
    der = derivatives(u)
    chan = np.zeros((3, g.ny, g.nx))
    for c, comp in enumerate((der.m11, der.m12, der.m22)):
        chan[c].ravel()[g.interior_idx] = comp
    return pbmo_seminorm(chan, g, p, rho_set, variant)


# ---------------------------------------------------------------------------
# Hoelder quotient of the gradient
# ---------------------------------------------------------------------------

@dataclass
class HolderDetail:
    value: float
    per_seed: tuple
    exhaustive: bool
    pairs: int


def holder_gradient(u: ScalarField, alpha: float, max_pairs: int = 100_000,
                    seed: int = 0, detail: bool = False):
    """max over node pairs of |D_h u(x) - D_h u(y)| / |x - y|^alpha.

    Exhaustive for n <= 65; otherwise two independently seeded samples of
    ``max_pairs`` pairs each (their agreement is the sampling-error report).
    """
    if not (0.0 < alpha < 1.0 or alpha == 1.0):
        raise ConfigurationError("need alpha in (0, 1]")
    g = u.grid
    der = derivatives(u)
    px, py = g.interior_x, g.interior_y
    gx, gy = der.gx, der.gy
    n = px.size

    def chunk_max(idx_a, idx_b):
        dgx = gx[idx_a] - gx[idx_b]
        dgy = gy[idx_a] - gy[idx_b]
        dist = np.hypot(px[idx_a] - px[idx_b], py[idx_a] - py[idx_b])
        keep = dist > 0.0
        if not keep.any():
            return 0.0
        return float((np.hypot(dgx, dgy)[keep] / dist[keep] ** alpha).max())

    if g.n <= FULL_PAIR_LIMIT:
        best = 0.0
        step = max(1, 2_000_000 // max(n, 1))
        for lo in range(0, n, step):
            ia = np.arange(lo, min(lo + step, n))
            ia2 = np.repeat(ia, n)
            ib = np.tile(np.arange(n), ia.size)
            best = max(best, chunk_max(ia2, ib))
        out = HolderDetail(best, (best,), True, n * n)
    else:
        vals = []
        for s in (seed, seed + 1):
            rng = np.random.default_rng(s)
            ia = rng.integers(0, n, max_pairs)
            ib = rng.integers(0, n, max_pairs)
            vals.append(chunk_max(ia, ib))
        out = HolderDetail(max(vals), tuple(vals), False, 2 * max_pairs)
    return out if detail else out.value


# ---------------------------------------------------------------------------
# A-priori ratios and the combined report
# ---------------------------------------------------------------------------

DENOM_FLOOR = 1e-12


def apriori_ratios(u: ScalarField, psi: ScalarField, f: ScalarField,
                   G_u: ScalarField, p: float, rho_set=None):
    """Measured constants of the two a-priori estimates.

    ratio_w2p = |u|_{W^{2,p}} / (|u|_inf + |psi|_{W^{2,p}} + |G_u|_p + |f|_p)
    ratio_bmo = [D^2 u]_{p-BMO} /
                (|u|_inf + [D^2 psi]_{p-BMO} + [G_u]_{p-BMO} + [f]_{p-BMO})

    ``psi`` must be the boundary data as a field on the whole domain (its
    interior extension), since the estimates involve volume norms of psi.
    """
    sup_u = float(np.abs(u.interior).max())
    den1 = sup_u + w2p_norm(psi, p) + lp_norm(G_u, p) + lp_norm(f, p)
    ratio1 = w2p_norm(u, p) / max(den1, DENOM_FLOOR)
    num2 = pbmo_of_hessian(u, p, rho_set)
    den2 = sup_u + pbmo_of_hessian(psi, p, rho_set) \
        + pbmo_of_field(G_u, p, rho_set) + pbmo_of_field(f, p, rho_set)
    ratio2 = num2 / max(den2, DENOM_FLOOR)
    return float(ratio1), float(ratio2)


@dataclass
class NormReport:
    p: float
    alpha: float
    lp: float
    w2p: float
    lip: float
    holder_grad: float
    pbmo_d2: float
    apriori_ratio_w2p: float
    apriori_ratio_bmo: float

    def to_dict(self) -> dict:
        return {
            "p": self.p, "alpha": self.alpha, "lp": self.lp, "w2p": self.w2p,
            "lip": self.lip, "holder_grad": self.holder_grad,
            "pbmo_d2": self.pbmo_d2,
            "apriori_ratio_w2p": self.apriori_ratio_w2p,
            "apriori_ratio_bmo": self.apriori_ratio_bmo,
        }


def compute_norm_report(u: ScalarField, psi: ScalarField, f: ScalarField,
                        G_u: ScalarField, p: float = 4.0, alpha: float = 0.5,
                        rho_set=None, seed: int = 0) -> NormReport:
    r1, r2 = apriori_ratios(u, psi, f, G_u, p, rho_set)
    return NormReport(
        p=float(p), alpha=float(alpha),
        lp=lp_norm(u, p), w2p=w2p_norm(u, p), lip=c01_norm(u),
        holder_grad=holder_gradient(u, alpha, seed=seed),
        pbmo_d2=pbmo_of_hessian(u, p, rho_set),
        apriori_ratio_w2p=r1, apriori_ratio_bmo=r2,
    )

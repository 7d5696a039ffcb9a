"""Finite-difference calculus on the lattice.

Gradients and Hessians come from unequal-arm central differences over the
grid's 8-arm stencil table.  On full arms these reduce to the classical
second-order formulas (central gradient, 3-point second difference, 4-point
cross), which are exact on quadratics; near the curved boundary the arms are
Shortley-Weller clipped and the same formulas apply with fractional lengths.

The cross derivative is assembled from the two diagonal second differences,

    u_xy = (D^2_{ne} u - D^2_{nw} u) / 2,

an identity that is exact for quadratics and keeps working with clipped arms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.typing import NDArray

from .errors import ConfigurationError, GeometryError
from .grid import (DomainGrid, DomainShape, EXTERIOR, ScalarField, conformable,
                   interp_boundary)
from .operators import (KIND_PUCCI_MINUS, KIND_PUCCI_PLUS, OperatorSpec,
                        SymMat2, eval_operator)

EIGEN = "eigen"


@dataclass(frozen=True)
class WideStencil:
    """Monotone mode: Hessian eigenvalues from K directional second differences.

    Directions are theta_j = j*pi/K.  ``arm`` is the arm length in nodes;
    the default max(2, K // 4) keeps the bilinear-interpolation error of the
    same order as the (pi/K)^2 directional resolution.
    """

    K: int
    arm: int | None = None

    @property
    def arm_nodes(self) -> int:
        return self.arm if self.arm is not None else max(2, self.K // 4)


@dataclass(eq=False)
class DiscreteDerivatives:
    """Gradient and Hessian at the interior nodes (compact (NI,) arrays)."""

    grid: DomainGrid
    gx: NDArray
    gy: NDArray
    m11: NDArray
    m12: NDArray
    m22: NDArray

    @property
    def hess(self) -> SymMat2:
        return SymMat2(self.m11, self.m12, self.m22)

    @property
    def grad_norm(self) -> NDArray:
        return np.hypot(self.gx, self.gy)

    @property
    def hess_frobenius(self) -> NDArray:
        return self.hess.frobenius()


def _axis_diffs(up, u_plus, u_minus, a, b, L):
    """Unequal-arm first/second differences on a line through the node.

    Arms reach a*L forward and b*L backward; exact on quadratics.
    """
    denom = a * b * (a + b)
    first = (b * b * u_plus - a * a * u_minus + (a * a - b * b) * up) / (denom * L)
    second = 2.0 * (b * u_plus + a * u_minus - (a + b) * up) / (denom * L * L)
    return first, second


def derivatives(u: ScalarField) -> DiscreteDerivatives:
    """Second-order accurate gradient and Hessian at every interior node."""
    g = u.grid
    ext = u.extended()
    v = ext[g.arm_idx]                 # (8, NI) gathered arm values
    if not np.isfinite(v).all():
        raise GeometryError("stencil arm read a node without data")
    up = u.values.ravel()[g.interior_idx]
    fr = g.arm_frac
    h = g.h
    gx, m11 = _axis_diffs(up, v[0], v[1], fr[0], fr[1], h)
    gy, m22 = _axis_diffs(up, v[2], v[3], fr[2], fr[3], h)
    sq2h = math.sqrt(2.0) * h
    _, d_ne = _axis_diffs(up, v[4], v[5], fr[4], fr[5], sq2h)
    _, d_nw = _axis_diffs(up, v[6], v[7], fr[6], fr[7], sq2h)
    m12 = 0.5 * (d_ne - d_nw)
    return DiscreteDerivatives(g, gx, gy, m11, m12, m22)


# ---------------------------------------------------------------------------
# Directional second differences (wide-stencil support)
# ---------------------------------------------------------------------------

def _bilinear_weights(grid: DomainGrid, px, py):
    """Cell-corner flat indices and weights for points inside the lattice hull.

    Returns (idx (4, n), w (4, n), resolvable (n,)) where a point counts as
    resolvable only if all four corners carry values (no exterior corner).
    """
    x0, y0 = grid.xs[0], grid.ys[0]
    h = grid.h
    fx = np.clip((np.asarray(px) - x0) / h, 0.0, grid.nx - 1.0 - 1e-12)
    fy = np.clip((np.asarray(py) - y0) / h, 0.0, grid.ny - 1.0 - 1e-12)
    ix = fx.astype(np.int64)
    iy = fy.astype(np.int64)
    tx = fx - ix
    ty = fy - iy
    idx = np.stack([
        iy * grid.nx + ix,
        iy * grid.nx + ix + 1,
        (iy + 1) * grid.nx + ix,
        (iy + 1) * grid.nx + ix + 1,
    ])
    w = np.stack([(1 - tx) * (1 - ty), tx * (1 - ty), (1 - tx) * ty, tx * ty])
    cls = grid.node_class.ravel()[idx]
    resolvable = (cls != EXTERIOR).all(axis=0)
    return idx, w, resolvable


def _boundary_exit_frac(grid: DomainGrid, px, py, vx, vy):
    """Fraction t > 0 where the ray p + t*(vx, vy) meets the domain boundary."""
    if grid.shape is DomainShape.UNIT_DISK:
        a = vx * vx + vy * vy
        b = px * vx + py * vy
        c = px * px + py * py - 1.0
        disc = np.maximum(b * b - a * c, 0.0)
        return (-b + np.sqrt(disc)) / a
    with np.errstate(divide="ignore"):
        tx = np.where(vx > 0, (1.0 - px) / vx, np.where(vx < 0, -px / vx, np.inf))
        ty = np.where(vy > 0, (1.0 - py) / vy, np.where(vy < 0, -py / vy, np.inf))
    return np.minimum(tx, ty)


@dataclass(eq=False)
class _ArmPlan:
    """One side of a directional stencil for all interior nodes at once."""

    frac: NDArray            # arm length as a fraction of the nominal length
    idx: NDArray             # (4, NI) bilinear corner indices (clipped arms: junk)
    w: NDArray               # (4, NI) bilinear weights
    clipped: NDArray         # bool mask: arm ends on the domain boundary
    bpts: NDArray            # (n_clipped, 2) boundary points for clipped arms


def _plan_arm(grid: DomainGrid, theta: float, sign: int, arm_len: float) -> _ArmPlan:
    vx = sign * math.cos(theta) * arm_len
    vy = sign * math.sin(theta) * arm_len
    px = grid.interior_x
    py = grid.interior_y
    ex = px + vx
    ey = py + vy
    idx, w, ok = _bilinear_weights(grid, ex, ey)
    if grid.shape is DomainShape.UNIT_DISK:
        inside = (ex * ex + ey * ey) < 1.0
    else:
        inside = (ex > 0.0) & (ex < 1.0) & (ey > 0.0) & (ey < 1.0)
    use_interp = inside & ok
    clipped = ~use_interp
    frac = np.ones(px.size)
    bpts = np.zeros((0, 2))
    if clipped.any():
        t = _boundary_exit_frac(grid, px[clipped], py[clipped], vx, vy)
        if not np.isfinite(t).all() or np.any(t <= 0.0):
            raise GeometryError("directional arm could not be clipped to the boundary")
        frac[clipped] = t
        bpts = np.column_stack([px[clipped] + t * vx, py[clipped] + t * vy])
    return _ArmPlan(frac=frac, idx=idx, w=w, clipped=clipped, bpts=bpts)


@lru_cache(maxsize=32)
def _wide_plan(grid: DomainGrid, K: int, arm_nodes: int):
    thetas = [j * math.pi / K for j in range(K)]
    arm_len = arm_nodes * grid.h
    return [(_plan_arm(grid, t, +1, arm_len), _plan_arm(grid, t, -1, arm_len))
            for t in thetas], arm_len


def _arm_values(plan: _ArmPlan, field: ScalarField, ext: NDArray) -> NDArray:
    vals = (plan.w * ext[plan.idx]).sum(axis=0)
    if plan.clipped.any():
        vals[plan.clipped] = interp_boundary(field, plan.bpts)
    return vals


def directional_second_differences(u: ScalarField, mode: WideStencil) -> NDArray:
    """(K, NI) array of second differences along theta_j = j*pi/K."""
    g = u.grid
    plans, arm_len = _wide_plan(g, mode.K, mode.arm_nodes)
    ext = u.extended()
    up = u.values.ravel()[g.interior_idx]
    out = np.empty((mode.K, g.n_interior))
    for j, (fwd, bwd) in enumerate(plans):
        u_plus = _arm_values(fwd, u, ext)
        u_minus = _arm_values(bwd, u, ext)
        _, second = _axis_diffs(up, u_plus, u_minus, fwd.frac, bwd.frac, arm_len)
        out[j] = second
    return out


def directional_dd(u: ScalarField, node, theta: float, k: int) -> float:
    """Single-node directional second difference with arms of k nodes.

    ``node`` is a lattice index pair (ix, iy); the node must be interior.
    Arms leaving the domain are clipped to the boundary and use interpolated
    Dirichlet data.
    """
    g = u.grid
    ix, iy = node
    flat = iy * g.nx + ix
    pos = np.searchsorted(g.interior_idx, flat)
    if pos >= g.n_interior or g.interior_idx[pos] != flat:
        raise ConfigurationError("directional_dd needs an interior node")
    fwd = _plan_arm(g, theta, +1, k * g.h)
    bwd = _plan_arm(g, theta, -1, k * g.h)
    ext = u.extended()
    up = u.values.ravel()[flat]
    u_plus = _arm_values(fwd, u, ext)[pos]
    u_minus = _arm_values(bwd, u, ext)[pos]
    _, second = _axis_diffs(up, u_plus, u_minus, float(fwd.frac[pos]),
                            float(bwd.frac[pos]), k * g.h)
    return float(second)


def lip_seminorm(u: ScalarField) -> float:
    """Discrete Lipschitz seminorm: max |u_i - u_j| / h over full-length arms.

    Clipped (Shortley-Weller) arms are excluded: their tiny denominators would
    turn boundary noise into spurious Lipschitz mass, and the stopping tests
    that use this seminorm compare difference fields that vanish on the
    boundary anyway.
    """
    g = u.grid
    ext = u.extended()
    up = u.values.ravel()[g.interior_idx]
    best = 0.0
    for arm in (0, 2):                     # E and N cover every axis pair once
        full = g.arm_frac[arm] == 1.0
        if full.any():
            d = np.abs(up[full] - ext[g.arm_idx[arm, full]]).max()
            best = max(best, float(d) / g.h)
    return best


# ---------------------------------------------------------------------------
# Residual assembly
# ---------------------------------------------------------------------------

def _pucci_from_extremes(spec: OperatorSpec, e_min, e_max):
    ell = spec.ellipticity
    if spec.kind == KIND_PUCCI_MINUS:
        lo, hi = ell.lam, ell.Lam
    else:
        lo, hi = ell.Lam, ell.lam
    return (lo * np.maximum(e_min, 0.0) + hi * np.minimum(e_min, 0.0)
            + lo * np.maximum(e_max, 0.0) + hi * np.minimum(e_max, 0.0))


def residual_values(spec: OperatorSpec, u: ScalarField, rhs: ScalarField,
                    mode=EIGEN) -> NDArray:
    """R = F(D^2_h u, D_h u, u, x) - rhs at interior nodes (compact array)."""
    conformable(u, rhs)
    g = u.grid
    rhs_int = rhs.values.ravel()[g.interior_idx]
    u_int = u.values.ravel()[g.interior_idx]
    if isinstance(mode, WideStencil):
        if spec.kind not in (KIND_PUCCI_MINUS, KIND_PUCCI_PLUS):
            raise ConfigurationError("wide-stencil mode is defined for Pucci kinds")
        dd = directional_second_differences(u, mode)
        F = _pucci_from_extremes(spec, dd.min(axis=0), dd.max(axis=0))
        return F - rhs_int
    der = derivatives(u)
    F = eval_operator(spec, der.hess, (der.gx, der.gy), u_int,
                      (g.interior_x, g.interior_y))
    return np.asarray(F) - rhs_int


def assemble_residual(spec: OperatorSpec, u: ScalarField, rhs: ScalarField,
                      mode=EIGEN) -> ScalarField:
    """Residual as a field: interior nodes carry R, boundary samples are zero."""
    g = u.grid
    vals = np.full((g.ny, g.nx), np.nan)
    vals[g.node_class != EXTERIOR] = 0.0
    vals.ravel()[g.interior_idx] = residual_values(spec, u, rhs, mode)
    cv = np.zeros(g.n_crossings) if g.n_crossings else None
    return ScalarField(g, vals, cv)

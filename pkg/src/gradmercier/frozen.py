"""Damped pseudo-time solver for the frozen Dirichlet problem

    F(D^2 u, Du, u, x) = rhs(x)  in Omega,      u = psi  on the boundary.

The interior is advanced by u <- u + tau * (F(...) - rhs) until the sup-norm
residual meets the tolerance; degenerate ellipticity makes the flow contract.
The nominal step is the linearized worst-case bound

    tau = 0.9 * h^2 / (4*Lam + 2*gamma*h + omega*h^2),

exact on full 5-point stencils; nodes with Shortley-Weller clipped arms get a
proportionally smaller local step (the clipped second differences carry
1/(a*b) amplification, which would break the CFL bound otherwise).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from . import _kernels
from .calculus import EIGEN, WideStencil, derivatives, residual_values
from .errors import (ConfigurationError, DivergenceError, NonConvergenceError)
from .grid import ScalarField, boundary_average, conformable
from .operators import (KIND_QUAD_TRACE, OperatorSpec, pucci_minus, pucci_plus)


@dataclass
class FrozenConfig:
    """Inner-solver knobs; ``None`` means the documented automatic choice."""

    tau: float | None = None
    tol_residual: float | None = None
    tol_residual_rel: float = 1e-8       # tol = rel * (1 + |rhs|_inf + |psi|_inf)
    max_iters: int = 200_000
    mode: object = EIGEN                 # EIGEN or WideStencil(K)
    tau_safety_scale: float = 1.0        # test hook; 10.0 forces divergence
    divergence_cap_rel: float = 1e9


@dataclass
class AbpRecord:
    """Maximum-principle audit of a solve (Alexandroff-Bakelman-Pucci form).

    With the package's sign convention (F = tr(M) is the Laplacian, so
    rhs >= 0 makes solutions subharmonic-like), the upper bound reads

        sup_interior(u) <= sup_boundary(u^+) + C * |rhs^-|_{L^p},

    and the strict discrete maximum principle (interior max below the
    boundary max) applies when rhs >= 0.
    """

    sup_interior: float
    sup_boundary_plus: float
    sup_boundary: float
    lp_rhs_minus: float
    p: float
    c_abp: float
    slack: float
    max_principle_ok: bool
    rhs_nonnegative: bool


@dataclass
class SolveReport:
    iters: int
    final_residual: float
    converged: bool
    tol_residual: float
    tau: float
    mode: str
    data_scale: float
    abp: AbpRecord | None = None
    residual_history: NDArray | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        d = {
            "iters": self.iters,
            "final_residual": self.final_residual,
            "converged": self.converged,
            "tol_residual": self.tol_residual,
            "tau": self.tau,
            "mode": self.mode,
            "data_scale": self.data_scale,
        }
        if self.abp is not None:
            d["abp"] = {
                "sup_interior": self.abp.sup_interior,
                "sup_boundary_plus": self.abp.sup_boundary_plus,
                "sup_boundary": self.abp.sup_boundary,
                "lp_rhs_minus": self.abp.lp_rhs_minus,
                "p": self.abp.p,
                "c_abp": self.abp.c_abp,
                "max_principle_ok": self.abp.max_principle_ok,
                "rhs_nonnegative": self.abp.rhs_nonnegative,
            }
        return d


def data_scale(rhs: ScalarField, psi: ScalarField) -> float:
    """Scale-invariant tolerance anchor: 1 + |rhs|_inf + |psi|_inf."""
    g = rhs.grid
    r = np.abs(rhs.values.ravel()[g.interior_idx]).max() if g.n_interior else 0.0
    b = psi.values.ravel()[g.boundary_idx]
    if g.n_crossings:
        b = np.concatenate([b, psi.crossing_values])
    p = np.abs(b).max() if b.size else 0.0
    return 1.0 + float(r) + float(p)


def auto_tau(spec: OperatorSpec, grid) -> float:
    ell = spec.ellipticity
    h = grid.h
    return 0.9 * h * h / (4.0 * ell.Lam + 2.0 * ell.gamma * h + ell.omega * h * h)


def tau_field(spec: OperatorSpec, grid, base_tau: float) -> NDArray:
    """Per-node step: ``base_tau`` on full stencils, shrunk on clipped ones.

    The local bound follows the stencil's own u-coefficient: the axis second
    differences contribute 2/(a*b) each and the diagonal pair (feeding the
    cross term) 1/(ab) each, which totals the familiar 4 + 2 on full arms;
    the "+2 - 2" normalization keeps the full-stencil value exactly at the
    documented formula.
    """
    ell = spec.ellipticity
    h = grid.h
    fr = grid.arm_frac
    s_axis = 2.0 / (fr[0] * fr[1]) + 2.0 / (fr[2] * fr[3])
    s_diag = 1.0 / (fr[4] * fr[5]) + 1.0 / (fr[6] * fr[7])
    s = s_axis + s_diag - 2.0
    amin = fr.min(axis=0)
    denom = ell.Lam * s + 2.0 * ell.gamma * h / amin + ell.omega * h * h
    local = 0.9 * h * h / denom
    return np.minimum(local, base_tau)


def _wide_tau_field(spec: OperatorSpec, grid, mode: WideStencil,
                    base_tau: float) -> NDArray:
    from .calculus import _wide_plan

    ell = spec.ellipticity
    h = grid.h
    plans, arm_len = _wide_plan(grid, mode.K, mode.arm_nodes)
    coeffs = np.stack([2.0 / (f.frac * b.frac * arm_len * arm_len)
                       for f, b in plans])
    coeffs.sort(axis=0)
    worst_two = coeffs[-1] + coeffs[-2] if coeffs.shape[0] > 1 else 2 * coeffs[-1]
    denom = ell.Lam * worst_two + 2.0 * ell.gamma / (h) + ell.omega
    return np.minimum(0.9 / denom, base_tau)


def solve_frozen(spec: OperatorSpec, rhs: ScalarField, psi: ScalarField,
                 cfg: FrozenConfig | None = None, u0: ScalarField | None = None,
                 with_abp: bool = True):
    """Solve the frozen problem; returns ``(u, SolveReport)``.

    ``u0`` warm-starts the interior; boundary data always comes from ``psi``.
    Raises :class:`NonConvergenceError` when the budget runs out and
    :class:`DivergenceError` on NaN/overflow (both carry the residual history).
    """
    cfg = cfg or FrozenConfig()
    conformable(rhs, psi)
    if spec.kind == KIND_QUAD_TRACE:
        raise ConfigurationError("operator outside the elliptic family")
    g = rhs.grid
    scale = data_scale(rhs, psi)
    tol = cfg.tol_residual if cfg.tol_residual is not None \
        else cfg.tol_residual_rel * scale
    if tol <= 0.0:
        raise ConfigurationError("tolerance must be positive")
    base_tau = cfg.tau if cfg.tau is not None else auto_tau(spec, g)
    div_cap = cfg.divergence_cap_rel * scale

    u = psi.copy()
    if u0 is not None:
        conformable(u0, psi)
        u.values.ravel()[g.interior_idx] = u0.values.ravel()[g.interior_idx]
    else:
        u.values.ravel()[g.interior_idx] = boundary_average(psi)
    rhs_int = np.ascontiguousarray(rhs.values.ravel()[g.interior_idx])

    if isinstance(cfg.mode, WideStencil):
        tau = _wide_tau_field(spec, g, cfg.mode, base_tau) * cfg.tau_safety_scale
        status, iters, hist = _wide_loop(spec, u, rhs, cfg.mode, tau,
                                         tol, cfg.max_iters, div_cap)
        mode_desc = f"wide_stencil(K={cfg.mode.K},arm={cfg.mode.arm_nodes})"
    else:
        (int_idx, idxT, W), packed = _kernels.kernel_args(spec, g)
        tau = tau_field(spec, g, base_tau) * cfg.tau_safety_scale
        ext = u.extended().copy()
        status, iters, hist = _kernels.pseudo_time_loop(
            ext, int_idx, idxT, W, rhs_int,
            np.ascontiguousarray(tau), *packed, tol, cfg.max_iters, div_cap)
        u.values.ravel()[g.interior_idx] = ext[g.interior_idx]
        mode_desc = "eigen"

    final_res = float(hist[-1]) if len(hist) else math.inf
    if status == _kernels.STATUS_DIVERGED:
        raise DivergenceError(
            f"pseudo-time iteration diverged after {iters} iterations "
            f"(residual {final_res:.3e}); the step tau may violate stability",
            history=hist)
    if status == _kernels.STATUS_MAX_ITERS:
        raise NonConvergenceError(
            f"no convergence in {cfg.max_iters} iterations "
            f"(residual {final_res:.3e} > tol {tol:.3e})", history=hist)

    report = SolveReport(
        iters=int(iters), final_residual=final_res, converged=True,
        tol_residual=float(tol), tau=float(base_tau), mode=mode_desc,
        data_scale=float(scale), residual_history=hist,
    )
    if with_abp:
        report.abp = abp_check(u, rhs, psi, p=4.0, tol=tol)
    return u, report


def _wide_loop(spec, u, rhs, mode, tau, tol, max_iters, div_cap):
    """Python-level pseudo-time loop for the wide-stencil mode."""
    g = u.grid
    hist = []
    flat = u.values.ravel()
    status = _kernels.STATUS_MAX_ITERS
    iters = 0
    for _ in range(max_iters):
        R = residual_values(spec, u, rhs, mode)
        resmax = float(np.abs(R).max())
        hist.append(resmax)
        iters += 1
        if not math.isfinite(resmax) or resmax > div_cap:
            status = _kernels.STATUS_DIVERGED
            break
        if resmax <= tol:
            status = _kernels.STATUS_CONVERGED
            break
        flat[g.interior_idx] += tau * R
    return status, iters, np.asarray(hist)


# ---------------------------------------------------------------------------
# Post-solve diagnostics
# ---------------------------------------------------------------------------

def abp_check(u: ScalarField, rhs: ScalarField, psi: ScalarField,
              p: float = 4.0, tol: float = 1e-8) -> AbpRecord:
    """Audit sup_interior(u) against boundary data plus the rhs^- L^p norm.

    The implied constant C_abp = (sup u - sup psi^+)^+ / |rhs^-|_p is the
    measured counterpart of the a-priori constant.  A genuine discrete
    maximum-principle violation is flagged when the interior max exceeds the
    boundary max by more than 10*tol although rhs >= 0 (the subharmonic
    side, where no interior maximum can form).
    """
    g = u.grid
    sup_int = float(u.values.ravel()[g.interior_idx].max())
    bvals = psi.values.ravel()[g.boundary_idx]
    if g.n_crossings:
        bvals = np.concatenate([bvals, psi.crossing_values])
    sup_b = float(bvals.max()) if bvals.size else 0.0
    sup_b_plus = max(sup_b, 0.0)
    m = g.cell_measure.ravel()[g.interior_idx]
    rhs_int = rhs.values.ravel()[g.interior_idx]
    rhs_minus = np.maximum(-rhs_int, 0.0)
    lp_minus = float((np.sum(rhs_minus ** p * m)) ** (1.0 / p))
    slack = 10.0 * tol
    excess = sup_int - sup_b_plus
    if lp_minus > 0.0:
        c_abp = max(0.0, excess) / lp_minus
    else:
        c_abp = 0.0
    nonneg = bool(rhs_int.min() >= -slack)
    ok = not (nonneg and sup_int > sup_b + slack)
    return AbpRecord(
        sup_interior=sup_int, sup_boundary_plus=sup_b_plus, sup_boundary=sup_b,
        lp_rhs_minus=lp_minus, p=float(p), c_abp=float(c_abp), slack=float(slack),
        max_principle_ok=ok, rhs_nonnegative=nonneg,
    )


@dataclass
class SandwichReport:
    """Discrete membership in the Pucci sub/supersolution classes."""

    passed: bool
    upper_margin: float      # min of M^+(D^2u) + gamma|Du| - (rhs - omega|u|) + slack
    lower_margin: float      # min of (rhs + omega|u|) + slack - (M^-(D^2u) - gamma|Du|)
    slack: float
    worst_node: tuple


def sandwich_check(u: ScalarField, spec: OperatorSpec, rhs: ScalarField,
                   tol: float = 1e-8, slack_factor: float = 10.0) -> SandwichReport:
    """Verify M^+(D^2_h u) + gamma|D_h u| >= rhs - omega|u| - slack and
    M^-(D^2_h u) - gamma|D_h u| <= rhs + omega|u| + slack at interior nodes."""
    conformable(u, rhs)
    g = u.grid
    ell = spec.ellipticity
    der = derivatives(u)
    u_int = u.values.ravel()[g.interior_idx]
    rhs_int = rhs.values.ravel()[g.interior_idx]
    gn = der.grad_norm
    slack = 10.0 * tol + slack_factor * g.h ** 2 * (1.0 + float(np.abs(u_int).max()))
    up = pucci_plus(der.hess, ell) + ell.gamma * gn - (rhs_int - ell.omega * np.abs(u_int))
    lo = (rhs_int + ell.omega * np.abs(u_int)) - (pucci_minus(der.hess, ell) - ell.gamma * gn)
    up_min = float(up.min())
    lo_min = float(lo.min())
    worst = int(np.argmin(np.minimum(up, lo)))
    return SandwichReport(
        passed=bool(up_min >= -slack and lo_min >= -slack),
        upper_margin=up_min, lower_margin=lo_min, slack=float(slack),
        worst_node=(float(g.interior_x[worst]), float(g.interior_y[worst])),
    )

import numpy as np
import pytest

from gradmercier.calculus import WideStencil
from gradmercier.errors import (ConfigurationError, DivergenceError,
                                NonConvergenceError)
from gradmercier.frozen import (FrozenConfig, abp_check, auto_tau,
                                sandwich_check, solve_frozen, tau_field)
from gradmercier.grid import (DomainShape, build_grid, constant_field,
                              field_from_function, sample_boundary)
from gradmercier.operators import (asym_convex_operator, pucci_operator,
                                   quad_trace_probe, trace_operator)


def zero(x, y):
    return np.zeros_like(x)


def sinsin_problem(n):
    g = build_grid(DomainShape.UNIT_SQUARE, n)
    rhs = field_from_function(
        g, lambda x, y: -2 * np.pi ** 2 * np.sin(np.pi * x) * np.sin(np.pi * y))
    psi = sample_boundary(g, zero)
    return g, rhs, psi


def test_manufactured_solution_convergence():
    errs = {}
    for n in (33, 65):
        g, rhs, psi = sinsin_problem(n)
        u, rep = solve_frozen(trace_operator(), rhs, psi)
        exact = np.sin(np.pi * g.interior_x) * np.sin(np.pi * g.interior_y)
        errs[n] = np.abs(u.interior - exact).max()
        assert rep.converged
    assert 3.2 <= errs[33] / errs[65] <= 4.8


def test_constant_boundary_solution():
    g = build_grid(DomainShape.UNIT_SQUARE, 17)
    u, rep = solve_frozen(trace_operator(), constant_field(g, 0.0),
                          sample_boundary(g, lambda x, y: 5.0 + 0 * x))
    assert np.abs(u.interior - 5.0).max() <= 10 * rep.tol_residual
    assert rep.iters <= 2       # the constant fill already solves it


def test_zero_solution_with_zeroth_order_term():
    # F(0,0,r,x) = -c0 r: psi = 0, rhs = 0 => u = 0
    g = build_grid(DomainShape.UNIT_SQUARE, 17)
    spec = asym_convex_operator(trace_operator(), kappa=0.2, c0=0.8)
    u, rep = solve_frozen(spec, constant_field(g, 0.0), sample_boundary(g, zero))
    assert np.abs(u.interior).max() <= 10 * rep.tol_residual


def test_pucci_quadratic_solution():
    g = build_grid(DomainShape.UNIT_SQUARE, 33)
    psi = sample_boundary(g, lambda x, y: 0.5 * (x * x - y * y))
    u, rep = solve_frozen(pucci_operator(1, 2), constant_field(g, -1.0), psi)
    exact = 0.5 * (g.interior_x ** 2 - g.interior_y ** 2)
    assert np.abs(u.interior - exact).max() <= 1e-6


def test_disk_poisson_quadratic():
    # lap u = 1 with u = 0 on the circle: u = (x^2 + y^2 - 1)/4 exactly
    g = build_grid(DomainShape.UNIT_DISK, 33)
    u, rep = solve_frozen(trace_operator(), constant_field(g, 1.0),
                          sample_boundary(g, zero))
    exact = (g.interior_x ** 2 + g.interior_y ** 2 - 1) / 4
    assert np.abs(u.interior - exact).max() <= 1e-6


def test_uniqueness_different_starts():
    g = build_grid(DomainShape.UNIT_SQUARE, 33)
    rhs = constant_field(g, -1.0)
    psi = sample_boundary(g, lambda x, y: 0.5 * (x * x - y * y))
    for spec in (trace_operator(), pucci_operator(1, 2)):
        u1, rep = solve_frozen(spec, rhs, psi)
        bumped = u1.copy()
        bumped.values = bumped.values + 1.0
        u2, _ = solve_frozen(spec, rhs, psi, u0=bumped)
        assert np.abs(u1.interior - u2.interior).max() <= 10 * rep.tol_residual


def test_tau_formula():
    g = build_grid(DomainShape.UNIT_SQUARE, 33)
    spec = pucci_operator(1.0, 2.0)
    expected = 0.9 * g.h ** 2 / (4 * 2.0)
    assert auto_tau(spec, g) == pytest.approx(expected, rel=1e-15)
    # full-stencil nodes keep exactly the base value
    tau = tau_field(spec, g, expected)
    assert np.allclose(tau, expected)
    # clipped disk arms shrink the local step, never grow it
    gd = build_grid(DomainShape.UNIT_DISK, 17)
    td = tau_field(spec, gd, auto_tau(spec, gd))
    assert td.max() <= auto_tau(spec, gd) + 1e-18
    assert td.min() < auto_tau(spec, gd)


def test_divergence_detection():
    g, rhs, psi = sinsin_problem(17)
    with pytest.raises(DivergenceError) as e:
        solve_frozen(trace_operator(), rhs, psi,
                     FrozenConfig(tau_safety_scale=10.0))
    assert len(e.value.history) > 0


def test_nonconvergence_carries_history():
    g, rhs, psi = sinsin_problem(17)
    with pytest.raises(NonConvergenceError) as e:
        solve_frozen(trace_operator(), rhs, psi, FrozenConfig(max_iters=5))
    assert len(e.value.history) == 5


def test_probe_rejected():
    g, rhs, psi = sinsin_problem(17)
    with pytest.raises(ConfigurationError):
        solve_frozen(quad_trace_probe(), rhs, psi)


def test_abp_record_orientation():
    # harmonic: interior max below boundary max
    g = build_grid(DomainShape.UNIT_SQUARE, 17)
    u, rep = solve_frozen(trace_operator(), constant_field(g, 0.0),
                          sample_boundary(g, lambda x, y: x))
    assert rep.abp.max_principle_ok and rep.abp.rhs_nonnegative
    assert rep.abp.sup_interior <= rep.abp.sup_boundary + rep.abp.slack
    # rhs <= 0: interior maximum is expected; C_abp measures it against
    # the L^p norm of rhs^-
    g, rhs, psi = sinsin_problem(33)
    u, rep = solve_frozen(trace_operator(), rhs, psi)
    assert rep.abp.max_principle_ok          # not flagged: rhs is negative
    assert not rep.abp.rhs_nonnegative
    assert rep.abp.sup_interior > rep.abp.sup_boundary_plus
    assert rep.abp.c_abp > 0
    assert rep.abp.sup_interior <= rep.abp.sup_boundary_plus \
        + rep.abp.c_abp * rep.abp.lp_rhs_minus + 1e-12


def test_abp_constant_stability():
    cs = {}
    for n in (33, 65):
        g, rhs, psi = sinsin_problem(n)
        u, rep = solve_frozen(trace_operator(), rhs, psi)
        cs[n] = rep.abp.c_abp
    assert abs(cs[33] - cs[65]) <= 0.3 * max(cs.values())


def test_sandwich_check():
    g = build_grid(DomainShape.UNIT_SQUARE, 33)
    rhs = constant_field(g, -1.0)
    psi = sample_boundary(g, lambda x, y: 0.5 * (x * x - y * y))
    spec = pucci_operator(1, 2)
    u, rep = solve_frozen(spec, rhs, psi)
    sw = sandwich_check(u, spec, rhs, tol=rep.tol_residual)
    assert sw.passed
    # pucci-minus solve: the lower inequality is active, the upper has slack
    assert abs(sw.lower_margin) <= sw.slack
    assert sw.upper_margin > 1.0
    # trace solve with lam = Lam: both inequalities tight
    ut, rept = solve_frozen(trace_operator(), rhs, psi)
    swt = sandwich_check(ut, trace_operator(), rhs, tol=rept.tol_residual)
    assert swt.passed
    assert abs(swt.upper_margin) <= swt.slack
    assert abs(swt.lower_margin) <= swt.slack
    # perturbed non-solution violates the sandwich
    bad = u.copy()
    bad.values.ravel()[g.interior_idx] += \
        0.1 * np.sin(3 * np.pi * g.interior_x) * np.sin(3 * np.pi * g.interior_y)
    assert not sandwich_check(bad, spec, rhs, tol=rep.tol_residual).passed


def test_wide_stencil_solve_and_comparison():
    # monotone mode: rhs1 <= rhs2 pointwise implies u1 >= u2 - 10 tol
    g = build_grid(DomainShape.UNIT_SQUARE, 17)
    psi = sample_boundary(g, zero)
    spec = pucci_operator(1.0, 2.0)
    cfg = FrozenConfig(mode=WideStencil(8), tol_residual=1e-7,
                       max_iters=100_000)
    rhs1 = constant_field(g, -2.0)
    rhs2 = constant_field(g, -1.0)
    u1, rep1 = solve_frozen(spec, rhs1, psi, cfg)
    u2, rep2 = solve_frozen(spec, rhs2, psi, cfg)
    assert np.all(u1.interior >= u2.interior - 10 * rep1.tol_residual)


def test_wide_stencil_residual_monotone_after_transient():
    g = build_grid(DomainShape.UNIT_SQUARE, 17)
    psi = sample_boundary(g, zero)
    cfg = FrozenConfig(mode=WideStencil(8), tol_residual=1e-6,
                       max_iters=100_000)
    u, rep = solve_frozen(pucci_operator(1, 2), constant_field(g, -1.0),
                          psi, cfg)
    h = rep.residual_history
    tail = h[min(100, len(h) - 1):]
    assert np.all(np.diff(tail) <= 1e-12)


def test_report_serializes():
    g, rhs, psi = sinsin_problem(17)
    u, rep = solve_frozen(trace_operator(), rhs, psi)
    d = rep.to_dict()
    assert d["converged"] and "abp" in d
    assert d["iters"] == rep.iters

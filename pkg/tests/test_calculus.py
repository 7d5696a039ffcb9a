import math

import numpy as np
import pytest

from gradmercier.calculus import (WideStencil, assemble_residual, derivatives,
                                  directional_dd, lip_seminorm,
                                  residual_values)
from gradmercier.errors import ConfigurationError
from gradmercier.grid import (DomainShape, build_grid, constant_field,
                              field_from_function)
from gradmercier.operators import (SymMat2, pucci_operator, trace_operator)


def quad_field(grid, A, b=(0.0, 0.0), c=0.0):
    return field_from_function(
        grid, lambda x, y: 0.5 * (A[0] * x * x + 2 * A[1] * x * y
                                  + A[2] * y * y) + b[0] * x + b[1] * y + c)


def test_quadratic_exactness_square():
    g = build_grid(DomainShape.UNIT_SQUARE, 33)
    u = field_from_function(g, lambda x, y: x * x + y * y)
    d = derivatives(u)
    assert np.abs(d.m11 - 2).max() <= 1e-12
    assert np.abs(d.m22 - 2).max() <= 1e-12
    assert np.abs(d.m12).max() <= 1e-12
    mid = np.argmin(np.hypot(g.interior_x - 0.5, g.interior_y - 0.5))
    assert d.gx[mid] == pytest.approx(1.0, abs=1e-12)
    assert d.gy[mid] == pytest.approx(1.0, abs=1e-12)


def test_quadratic_exactness_disk_clipped_arms():
    g = build_grid(DomainShape.UNIT_DISK, 17)
    rng = np.random.default_rng(4)
    A = rng.uniform(-3, 3, 3)
    b = rng.uniform(-2, 2, 2)
    u = quad_field(g, A, b, 0.7)
    d = derivatives(u)
    scale = 1 + np.abs(A).max()
    assert np.abs(d.m11 - A[0]).max() <= 1e-9 * scale
    assert np.abs(d.m12 - A[1]).max() <= 1e-9 * scale
    assert np.abs(d.m22 - A[2]).max() <= 1e-9 * scale
    gx = A[0] * g.interior_x + A[1] * g.interior_y + b[0]
    assert np.abs(d.gx - gx).max() <= 1e-9 * scale


def test_constant_field_derivatives_vanish():
    g = build_grid(DomainShape.UNIT_SQUARE, 17)
    d = derivatives(constant_field(g, 7.0))
    for arr in (d.gx, d.gy, d.m11, d.m12, d.m22):
        assert np.abs(arr).max() == 0.0


def test_hessian_second_order_convergence():
    def err(n):
        g = build_grid(DomainShape.UNIT_SQUARE, n)
        u = field_from_function(g, lambda x, y: np.sin(np.pi * x) * np.sin(np.pi * y))
        d = derivatives(u)
        exact = -np.pi ** 2 * np.sin(np.pi * g.interior_x) * np.sin(np.pi * g.interior_y)
        return np.abs(d.m11 - exact).max()

    ratio = err(33) / err(65)
    assert 3.2 <= ratio <= 4.8          # second order: ratio ~ 4 +/- 20%


def test_directional_dd():
    g = build_grid(DomainShape.UNIT_SQUARE, 33)
    u = field_from_function(g, lambda x, y: x * x)
    c = (16, 16)
    assert directional_dd(u, c, 0.0, 2) == pytest.approx(2.0, abs=1e-9)
    assert directional_dd(u, c, math.pi / 2, 2) == pytest.approx(0.0, abs=1e-10)
    lin = field_from_function(g, lambda x, y: 3 * x - 2 * y + 1)
    for th in (0.3, 1.1, 2.7):
        assert directional_dd(lin, c, th, 3) == pytest.approx(0.0, abs=1e-9)
    # general quadratic along any direction: theta^T A theta
    A = (1.3, 0.4, -0.8)
    q = quad_field(g, A)
    for th in (0.0, math.pi / 4, 1.2):
        tv = np.array([math.cos(th), math.sin(th)])
        exact = tv @ np.array([[A[0], A[1]], [A[1], A[2]]]) @ tv
        got = directional_dd(q, c, th, 3)
        assert got == pytest.approx(exact, abs=2e-2 * (1 + abs(exact)))
    with pytest.raises(ConfigurationError):
        directional_dd(u, (0, 0), 0.0, 1)      # boundary node


def test_residual_manufactured_convergence():
    def rinf(n):
        g = build_grid(DomainShape.UNIT_SQUARE, n)
        u = field_from_function(g, lambda x, y: np.sin(np.pi * x) * np.sin(np.pi * y))
        rhs = field_from_function(
            g, lambda x, y: -2 * np.pi ** 2 * np.sin(np.pi * x) * np.sin(np.pi * y))
        return np.abs(residual_values(trace_operator(), u, rhs)).max()

    ratio = rinf(33) / rinf(65)
    assert 3.2 <= ratio <= 4.8


def test_residual_self_consistency():
    # rhs built from the discrete operator itself nulls the residual
    g = build_grid(DomainShape.UNIT_SQUARE, 17)
    u = field_from_function(g, lambda x, y: np.exp(x) * np.cos(2 * y))
    d = derivatives(u)
    rhs = constant_field(g, 0.0)
    rhs.values.ravel()[g.interior_idx] = d.m11 + d.m22
    R = residual_values(trace_operator(), u, rhs)
    assert np.abs(R).max() <= 1e-13


def test_pucci_quadratic_residual():
    g = build_grid(DomainShape.UNIT_SQUARE, 33)
    u = field_from_function(g, lambda x, y: 0.5 * (x * x - y * y))
    rhs = constant_field(g, -1.0)
    R = residual_values(pucci_operator(1, 2), u, rhs)
    assert np.abs(R).max() <= 1e-10


def test_wide_stencil_consistency_decay():
    g = build_grid(DomainShape.UNIT_SQUARE, 33)
    A = (1.3, 0.4, -0.8)
    u = quad_field(g, A)
    e1, e2 = SymMat2(*A).eigenvalues()
    exact = sum(1.0 * e if e > 0 else 2.0 * e for e in (float(e1), float(e2)))
    rhs = constant_field(g, exact)
    spec = pucci_operator(1, 2)
    Re = residual_values(spec, u, rhs)
    prev = None
    for K in (8, 16, 32):
        mode = WideStencil(K)
        L = mode.arm_nodes * g.h
        core = np.minimum.reduce([g.interior_x, 1 - g.interior_x,
                                  g.interior_y, 1 - g.interior_y]) > L + 1e-12
        Rw = residual_values(spec, u, rhs, mode)
        diff = np.abs(Rw - Re)[core].max()
        assert diff <= 1.0 * (math.pi / K) ** 2
        if prev is not None:
            assert diff < prev
        prev = diff


def test_wide_stencil_requires_pucci():
    g = build_grid(DomainShape.UNIT_SQUARE, 17)
    u = constant_field(g, 0.0)
    with pytest.raises(ConfigurationError):
        residual_values(trace_operator(), u, u, WideStencil(8))


def test_translation_equivariance():
    # residual of the shifted field equals the shifted residual where both
    # stencils are interior
    g = build_grid(DomainShape.UNIT_SQUARE, 33)
    fn = lambda x, y: np.sin(2.1 * x + 0.3) * np.cos(1.7 * y)
    u = field_from_function(g, fn)
    u_sh = field_from_function(g, lambda x, y: fn(x + g.h, y))
    rhs = constant_field(g, 0.0)
    R = assemble_residual(trace_operator(), u, rhs).values
    R_sh = assemble_residual(trace_operator(), u_sh, rhs).values
    inner = slice(1, -1)
    got = R_sh[inner, 1:-2]
    want = R[inner, 2:-1]
    mask = np.isfinite(got) & np.isfinite(want)
    assert np.abs(got[mask] - want[mask]).max() <= 1e-11


def test_lip_seminorm():
    g = build_grid(DomainShape.UNIT_SQUARE, 17)
    lin = field_from_function(g, lambda x, y: 3 * x - 4 * y)
    assert lip_seminorm(lin) == pytest.approx(4.0, abs=1e-12)
    assert lip_seminorm(constant_field(g, 2.0)) == 0.0

import math

import numpy as np
import pytest

from gradmercier.errors import ConfigurationError, DiagnosticError
from gradmercier.grid import DomainShape, build_grid
from gradmercier.operators import (Ellipticity, SymMat2, asym_convex_operator,
                                   bellman_operator, check_smallness,
                                   check_structure_condition, eval_operator,
                                   linear_operator, oscillation_beta,
                                   pucci_minus, pucci_operator, pucci_plus,
                                   quad_trace_probe, recession_eval,
                                   trace_operator)

ELL12 = Ellipticity(1.0, 2.0)


def family_members():
    return [
        trace_operator(),
        linear_operator(0.3, 1.0, 0.5, (2.0, 0.3, 1.0)),
        pucci_operator(1.0, 2.0),
        pucci_operator(1.0, 2.0, plus=True),
        bellman_operator([(1, 0, 1), (2, 0.2, 1.5), (1.2, -0.3, 2.0)]),
        asym_convex_operator(pucci_operator(1.0, 2.0), kappa=0.5, rho0=0.8,
                             c0=0.7, b0=0.4),
    ]


def test_pucci_hand_values():
    assert pucci_minus(SymMat2.identity(), ELL12) == 2.0
    assert pucci_plus(SymMat2.identity(), ELL12) == 4.0
    D = SymMat2.diag(1.0, -1.0)
    assert pucci_minus(D, ELL12) == -1.0
    assert pucci_plus(D, ELL12) == 1.0
    Z = SymMat2(0.0, 0.0, 0.0)
    assert pucci_minus(Z, ELL12) == 0.0 and pucci_plus(Z, ELL12) == 0.0


def test_pucci_duality():
    rng = np.random.default_rng(0)
    M = SymMat2(*rng.uniform(-10, 10, (3, 1000)))
    Mn = SymMat2(-M.m11, -M.m12, -M.m22)
    assert np.abs(pucci_minus(M, ELL12) + pucci_plus(Mn, ELL12)).max() <= 1e-12


def test_pucci_extremality():
    # M^- <= tr(A M) <= M^+ for every A with spectrum in [lam, Lam]
    rng = np.random.default_rng(1)
    k = 1000
    e = rng.uniform(ELL12.lam, ELL12.Lam, (2, k))
    th = rng.uniform(0, math.pi, k)
    ct, st = np.cos(th), np.sin(th)
    a11 = ct * ct * e[0] + st * st * e[1]
    a22 = st * st * e[0] + ct * ct * e[1]
    a12 = ct * st * (e[0] - e[1])
    M = SymMat2(*rng.uniform(-5, 5, (3, k)))
    lin = a11 * M.m11 + 2 * a12 * M.m12 + a22 * M.m22
    assert np.all(lin <= pucci_plus(M, ELL12) + 1e-10)
    assert np.all(lin >= pucci_minus(M, ELL12) - 1e-10)


def test_eval_operator_examples():
    assert eval_operator(trace_operator(), SymMat2.diag(2.0, 3.0)) == 5.0
    v = eval_operator(pucci_operator(1, 2), SymMat2.diag(1.0, -1.0),
                      p=(3.0, -1.0), r=17.0, x=(0.3, 0.4))
    assert v == -1.0       # pure Pucci kind ignores lower-order arguments
    ac = asym_convex_operator(trace_operator(), kappa=0.99, rho0=1.0, c0=1.0)
    v = eval_operator(ac, SymMat2(0.0, 0.0, 0.0), (0.0, 0.0), 2.0, (0.1, 0.1))
    assert v == pytest.approx(-2.0, abs=1e-15)


def test_degenerate_ellipticity_every_kind():
    rng = np.random.default_rng(2)
    for spec in family_members():
        M = SymMat2(*rng.uniform(-5, 5, (3, 400)))
        a = rng.uniform(0, 2, 400)
        c = rng.uniform(0, 2, 400)
        b = rng.uniform(-1, 1, 400) * np.sqrt(a * c)   # PSD: b^2 <= a c
        MP = SymMat2(M.m11 + a, M.m12 + b, M.m22 + c)
        x = (rng.uniform(0, 1, 400), rng.uniform(0, 1, 400))
        v0 = np.asarray(eval_operator(spec, M, x=x))
        v1 = np.asarray(eval_operator(spec, MP, x=x))
        assert np.all(v1 >= v0 - 1e-10), spec.kind


def test_operator_zero_point_bounded():
    for spec in family_members():
        v = float(np.asarray(eval_operator(spec, SymMat2(0.0, 0.0, 0.0),
                                           x=(0.3, 0.7))))
        assert abs(v) <= spec.kappa * math.pi / 2 + 1e-15


def test_recession_homogeneous_kinds_exact():
    M = SymMat2.diag(1.0, -5.0)
    for spec in family_members()[:5]:
        val, tr = recession_eval(spec, M, (0.2, 0.2))
        direct = float(np.asarray(eval_operator(spec, M, x=(0.2, 0.2))))
        assert all(abs(t - direct) <= 1e-9 * (1 + abs(direct)) for t in tr)


def test_recession_asym_rate():
    kappa = 0.9
    spec = asym_convex_operator(trace_operator(), kappa=kappa)
    val, tr = recession_eval(spec, SymMat2.identity())
    mus = (1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6)
    for mu, t in zip(mus, tr):
        assert abs(t - 2.0) <= mu * kappa * math.pi / 2 + 1e-12
    assert val == pytest.approx(2.0, abs=1e-6 * kappa * math.pi / 2 + 1e-12)


def test_recession_bounded_perturbation():
    spec = asym_convex_operator(pucci_operator(1, 2), kappa=0.6, rho0=1.0)
    rng = np.random.default_rng(3)
    M = SymMat2(*rng.uniform(-20, 20, (3, 500)))
    full = np.asarray(eval_operator(spec, M))
    rec = np.asarray(eval_operator(spec.recession(), M))
    assert np.abs(full - rec).max() <= 0.6 * math.pi / 2 + 1e-12


def test_recession_preconditions_and_probe():
    with pytest.raises(ConfigurationError):
        recession_eval(trace_operator(), SymMat2.identity(), mu_list=[1e-3])
    with pytest.raises(ConfigurationError):
        recession_eval(trace_operator(), SymMat2.identity(),
                       mu_list=[1e-7, 1e-6])
    with pytest.raises(DiagnosticError):
        recession_eval(quad_trace_probe(), SymMat2.identity())


def test_structure_condition_family_and_probe():
    for spec in family_members():
        rep = check_structure_condition(spec, 10_000, seed=11)
        assert rep.violations == 0, (spec.kind, rep.worst_margin)
    rep = check_structure_condition(quad_trace_probe(), 10_000, seed=11)
    assert rep.violations > 0
    assert rep.worst_witness is not None
    assert rep.worst_witness["margin"] < 0


def test_oscillation_beta_examples():
    lin = linear_operator(0.01, 1.0, 0.0)          # A = (1 + eps sin 2pi x) I
    assert oscillation_beta(lin, (0.3, 0.4), (0.3, 0.4)) == 0.0
    assert oscillation_beta(trace_operator(), (0.1, 0.1), (0.9, 0.9)) == 0.0
    # closed form under the Frobenius convention: beta = sqrt(2) |delta a|,
    # maximized at sqrt(2) * 2 * eps over antipodal phases
    b = oscillation_beta(lin, (0.25, 0.5), (0.75, 0.5), seed=5)
    cap = 2 * math.sqrt(2) * 0.01
    assert 0.9 * cap <= b <= cap + 1e-12
    # grows with |sin - sin|
    b_small = oscillation_beta(lin, (0.25, 0.5), (0.30, 0.5), seed=5)
    assert b_small < b


def test_check_smallness():
    g = build_grid(DomainShape.UNIT_SQUARE, 33)
    rep = check_smallness(trace_operator(), g, (0.5, 0.5), 0.25, 4.0,
                          theta0=1e-6, alpha0=0.5)
    assert rep.passed and rep.measured == 0.0
    # Lipschitz coefficient: beta <= sqrt(2)*eps*2*pi*|x - x0| pointwise
    eps = 0.01
    lin = linear_operator(eps, 1.0, 0.0)
    rep = check_smallness(lin, g, (0.5, 0.5), 0.25, 4.0,
                          theta0=math.sqrt(2) * eps * 2 * math.pi, alpha0=1.0)
    assert rep.passed
    big = linear_operator(0.95, 1.0, 0.0)
    rep = check_smallness(big, g, (0.5, 0.5), 0.5, 4.0, theta0=0.1, alpha0=1.0)
    assert not rep.passed
    with pytest.raises(ConfigurationError):
        check_smallness(lin, g, (0.5, 0.5), 1e-3, 4.0, 1.0, 1.0)  # r < h
    with pytest.raises(ConfigurationError):
        check_smallness(lin, g, (0.5, 0.5), 0.25, 2.0, 1.0, 1.0)  # p <= 2


def test_ellipticity_validation():
    with pytest.raises(ConfigurationError):
        Ellipticity(0.0, 1.0)
    with pytest.raises(ConfigurationError):
        Ellipticity(2.0, 1.0)
    with pytest.raises(ConfigurationError):
        asym_convex_operator(trace_operator(), kappa=1.5)   # kappa >= lam*
    with pytest.raises(ConfigurationError):
        linear_operator(eps=1.2)
    with pytest.raises(ConfigurationError):
        bellman_operator([(1.0, 5.0, 1.0)])                 # not SPD

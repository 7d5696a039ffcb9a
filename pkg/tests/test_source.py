import math

import numpy as np
import pytest

from gradmercier.errors import ConfigurationError
from gradmercier.grid import (DomainShape, ScalarField, build_grid,
                              constant_field, field_from_function)
from gradmercier.source import (SourceSpec, build_distribution,
                                grad_mercier_source, level_flatness,
                                mollified_source, riemann_mollified_average,
                                superlevel_measure)

IDENTITY = SourceSpec.affine(0.0, 1.0)


def random_field(grid, rng):
    vals = np.full((grid.ny, grid.nx), np.nan)
    ok = grid.node_class != 2
    vals[ok] = rng.uniform(0.0, 1.0, int(ok.sum()))
    return ScalarField(grid, vals)


def two_block_field(grid):
    vals = np.full((grid.ny, grid.nx), np.nan)
    vals[grid.node_class != 2] = 0.0
    chk = np.zeros(grid.n_interior)
    chk[::2] = 1.0
    vals.ravel()[grid.interior_idx] = chk
    return ScalarField(grid, vals), chk


def test_distribution_constant_field():
    g = build_grid(DomainShape.UNIT_SQUARE, 17)
    d = build_distribution(constant_field(g, 3.0))
    assert d.superlevel(2.9) == d.total
    assert d.superlevel(3.0) == d.total       # ties counted in (>=)
    assert d.superlevel(3.1) == 0.0


def test_distribution_linear_field():
    g = build_grid(DomainShape.UNIT_SQUARE, 33)
    d = build_distribution(field_from_function(g, lambda x, y: x))
    for t in (0.1, 0.5, 0.9):
        assert abs(d.superlevel(t) / d.total - (1 - t)) <= g.h + 1e-12


def test_superlevel_extremes_and_ties():
    g = build_grid(DomainShape.UNIT_SQUARE, 17)
    u, chk = two_block_field(g)
    d = build_distribution(u)
    assert superlevel_measure(d, -1.0) == d.total
    assert superlevel_measure(d, 2.0) == 0.0
    m1 = chk.sum() * g.h ** 2
    assert superlevel_measure(d, 1.0) == pytest.approx(m1, rel=1e-14)
    assert superlevel_measure(d, 0.5) == pytest.approx(m1, rel=1e-14)


def test_monotone_coupling():
    g = build_grid(DomainShape.UNIT_SQUARE, 17)
    rng = np.random.default_rng(8)
    d = build_distribution(random_field(g, rng))
    ts = np.sort(rng.uniform(-0.5, 1.5, 1000))
    mus = d.superlevel(ts)
    assert np.all(np.diff(mus) <= 1e-15)


def test_source_constant_and_unit():
    g = build_grid(DomainShape.UNIT_SQUARE, 17)
    u = constant_field(g, 2.5)
    G = grad_mercier_source(u, IDENTITY)
    assert np.allclose(G.interior, build_distribution(u).total)
    Gone = grad_mercier_source(u, SourceSpec.constant(1.0))
    assert np.all(Gone.interior == 1.0)


def test_source_linear_field():
    g = build_grid(DomainShape.UNIT_SQUARE, 33)
    u = field_from_function(g, lambda x, y: x)
    d = build_distribution(u)
    G = grad_mercier_source(u, IDENTITY)
    expected = (1 - u.interior) * d.total
    assert np.abs(G.interior - expected).max() <= d.total * (g.h + 1e-12)


def test_mollified_constant_field_any_delta():
    g = build_grid(DomainShape.UNIT_SQUARE, 17)
    u = constant_field(g, 1.0)
    for delta in (0.01, 0.5, 3.0):
        G = mollified_source(u, SourceSpec.affine(0.0, 1.0, delta=delta))
        assert np.allclose(G.interior, build_distribution(u).total)


def test_mollified_two_block_exact():
    g = build_grid(DomainShape.UNIT_SQUARE, 17)
    u, chk = two_block_field(g)
    d = build_distribution(u)
    m1 = chk.sum() * g.h ** 2
    # window (0.5, 1] crosses no breakpoint: average is exactly the measure
    assert d.mollified_average(1.0, 0.5) == pytest.approx(m1, abs=1e-15)
    # brute-force Riemann oracle agrees (constant integrand -> exact)
    r = riemann_mollified_average(d, 1.0, 0.5, panels=100_000)
    assert abs(r - m1) <= 1e-12


def test_exact_integral_vs_riemann_random_fields():
    # The midpoint oracle carries straddle noise ~ (delta/K) sqrt(B/12) m_bar;
    # at ~260k values and K = 1e6 panels the expected relative discrepancy is
    # ~5e-10, so 5e-9 is a 9-sigma bound.
    g = build_grid(DomainShape.UNIT_SQUARE, 513)
    rng = np.random.default_rng(9)
    worst = 0.0
    for _ in range(5):
        u = random_field(g, rng)
        d = build_distribution(u)
        t = float(np.quantile(u.interior, 0.25))
        for delta in (0.5, 0.05):
            exact = d.mollified_average(t, delta)
            oracle = riemann_mollified_average(d, t, delta, panels=1_000_000)
            worst = max(worst, abs(exact - oracle) / exact)
    assert worst <= 5e-9


def test_delta_consistency_linear_field():
    # derived closed form: for u = x with g = identity the mollified average
    # exceeds the sharp one by delta*|Omega|_h/2 up to an O(h) half-step bias
    g = build_grid(DomainShape.UNIT_SQUARE, 65)
    u = field_from_function(g, lambda x, y: x)
    total = build_distribution(u).total
    G0 = grad_mercier_source(u, IDENTITY)
    inner = (g.interior_x > 0.3) & (g.interior_x < 0.7)
    for delta in (0.2, 0.1, 0.05):
        Gd = mollified_source(u, SourceSpec.affine(0.0, 1.0, delta=delta))
        diff = (Gd.interior - G0.interior)[inner]
        target = delta * total / 2
        assert np.abs(diff - target).max() <= 0.75 * g.h * total
    # convergence G^delta -> G as delta -> 0 at the Lip(g)*|O|*delta/2 rate
    deltas = np.array([0.2, 0.1, 0.05])
    gaps = []
    for delta in deltas:
        Gd = mollified_source(u, SourceSpec.affine(0.0, 1.0, delta=delta))
        gaps.append(np.abs(Gd.interior - G0.interior)[inner].max())
    assert gaps[0] > gaps[1] > gaps[2]
    for delta, gap in zip(deltas, gaps):
        assert gap <= delta / 2 * total * 1.0 + g.h * total


def test_rearrangement_invariance():
    # permuting equal-measure cells leaves the multiset of source values alone
    g = build_grid(DomainShape.UNIT_SQUARE, 17)
    rng = np.random.default_rng(10)
    u = random_field(g, rng)
    vals = u.interior.copy()
    perm = rng.permutation(vals.size)
    u2 = u.with_interior(vals[perm])
    G1 = np.sort(grad_mercier_source(u, IDENTITY).interior)
    G2 = np.sort(grad_mercier_source(u2, IDENTITY).interior)
    assert np.array_equal(G1, G2)
    s = SourceSpec.affine(0.0, 1.0, delta=0.3)
    M1 = np.sort(mollified_source(u, s).interior)
    M2 = np.sort(mollified_source(u2, s).interior)
    assert np.abs(M1 - M2).max() <= 1e-14


def test_level_flatness():
    g = build_grid(DomainShape.UNIT_SQUARE, 65)
    u = field_from_function(g, lambda x, y: x)
    total = build_distribution(u).total
    eps = 0.1
    f = level_flatness(u, eps)
    assert abs(f - 2 * eps * total) <= 1.5 * g.h * total
    c = constant_field(g, 5.0)
    assert level_flatness(c, 0.01) == build_distribution(c).total
    ub, chk = two_block_field(g)
    m_big = max(chk.sum(), chk.size - chk.sum()) * g.h ** 2
    assert level_flatness(ub, 0.3) == pytest.approx(m_big, rel=1e-14)
    with pytest.raises(ConfigurationError):
        level_flatness(u, 0.0)


def test_tie_convention_hook():
    # flipping the tie changes the sharp superlevel at atoms but not the
    # exact inner integral (steps at single thresholds carry no measure)
    g = build_grid(DomainShape.UNIT_SQUARE, 17)
    u, chk = two_block_field(g)
    d_closed = build_distribution(u, tie_side="left")
    d_open = build_distribution(u, tie_side="right")
    m1 = chk.sum() * g.h ** 2
    assert d_closed.superlevel(1.0) == pytest.approx(m1, rel=1e-14)
    assert d_open.superlevel(1.0) == 0.0
    assert d_closed.mollified_average(1.0, 0.5) == \
        pytest.approx(d_open.mollified_average(1.0, 0.5), abs=1e-15)


def test_source_families_and_lipschitz():
    se = SourceSpec.exp_decay(2.0, 3.0)
    assert se.g(0.5) == pytest.approx(2 * math.exp(-1.5), rel=1e-15)
    assert se.lipschitz_bound(1.0) == 6.0
    st = SourceSpec.tabulated([0.0, 0.5, 1.0], [1.0, 0.0, 2.0])
    assert st.g(0.25) == 0.5
    assert st.lipschitz_bound(1.0) == 4.0
    aff = SourceSpec.affine(1.0, -2.0)
    assert aff.lipschitz_bound(5.0) == 2.0
    assert aff.sup_bound(5.0) == 11.0
    with pytest.raises(ConfigurationError):
        SourceSpec("bogus")
    with pytest.raises(ConfigurationError):
        SourceSpec.tabulated([0.0, 0.0], [1.0, 2.0])
    with pytest.raises(ConfigurationError):
        SourceSpec.affine(0.0, 1.0, delta=-0.1)


def test_tabulated_from_csv(tmp_path):
    path = tmp_path / "g.csv"
    path.write_text("s,g\n0.0,1.0\n0.5,2.0\n1.2,0.0\n")
    src = SourceSpec.from_csv(path)
    assert src.g(0.25) == 1.5
    assert src.g(2.0) == 0.0          # clamped to the table range


def test_measure_rescale_option():
    g = build_grid(DomainShape.UNIT_DISK, 17)
    u = constant_field(g, 1.0)
    d = build_distribution(u)
    G_raw = grad_mercier_source(u, IDENTITY)
    G_scaled = grad_mercier_source(
        u, SourceSpec.affine(0.0, 1.0, rescale_measure=True))
    assert np.allclose(G_raw.interior, d.total)
    assert np.allclose(G_scaled.interior, math.pi)

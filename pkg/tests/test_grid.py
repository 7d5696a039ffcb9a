import math

import numpy as np
import pytest

from gradmercier.errors import ConfigurationError
from gradmercier.grid import (BOUNDARY, EXTERIOR, INTERIOR, DomainShape,
                              ScalarField, build_grid, conformable,
                              constant_field, field_from_function,
                              interp_boundary, load_field_csv,
                              load_field_json, sample_boundary,
                              save_field_csv, save_field_json)


def test_reject_small_n():
    with pytest.raises(ConfigurationError):
        build_grid(DomainShape.UNIT_SQUARE, 3)
    with pytest.raises(ConfigurationError):
        build_grid(DomainShape.UNIT_DISK, 7)


def test_square_counts_and_measure():
    g = build_grid(DomainShape.UNIT_SQUARE, 9)
    assert g.n_interior == 7 * 7
    assert g.boundary_idx.size == 32
    assert g.measure == pytest.approx(49 * (1 / 8) ** 2, abs=0)


def test_square_measure_exact_formula():
    for n in (8, 16, 33):
        g = build_grid(DomainShape.UNIT_SQUARE, n)
        assert g.measure == pytest.approx((n - 2) ** 2 * g.h ** 2, rel=1e-15)


def test_disk_measure_converges_to_pi():
    # independent oracle: |Omega| = pi exactly; the spec band is 4h relative
    for n in (17, 33, 65):
        g = build_grid(DomainShape.UNIT_DISK, n)
        rel = abs(g.measure - math.pi) / math.pi
        assert rel <= 4 * g.h


def test_partition_property():
    for shape, n in ((DomainShape.UNIT_SQUARE, 12), (DomainShape.UNIT_DISK, 12)):
        g = build_grid(shape, n)
        counts = [(g.node_class == c).sum() for c in (INTERIOR, BOUNDARY, EXTERIOR)]
        assert sum(counts) == g.n_lattice


def test_disk_dihedral_symmetry():
    g = build_grid(DomainShape.UNIT_DISK, 21)
    nc = g.node_class
    for t in (nc[::-1, :], nc[:, ::-1], nc.T, nc[::-1, ::-1],
              nc.T[::-1, :], nc.T[:, ::-1], nc[::-1, ::-1].T):
        assert (t == nc).all()


def test_disk_crossings_on_circle():
    g = build_grid(DomainShape.UNIT_DISK, 33)
    r = np.hypot(g.crossing_points[:, 0], g.crossing_points[:, 1])
    assert np.abs(r - 1.0).max() <= 1e-12
    assert (g.arm_frac > 0).all() and (g.arm_frac <= 1).all()


def test_interior_arms_have_data():
    # every arm of an interior node lands on a node with a value or a crossing
    g = build_grid(DomainShape.UNIT_DISK, 17)
    lattice_arms = g.arm_idx < g.n_lattice
    classes = g.node_class.ravel()[np.where(lattice_arms, g.arm_idx, 0)]
    assert not np.any((classes == EXTERIOR) & lattice_arms)


def test_sample_boundary_zero_and_coordinate():
    g = build_grid(DomainShape.UNIT_SQUARE, 9)
    f0 = sample_boundary(g, lambda x, y: np.zeros_like(x))
    assert np.all(f0.values[g.node_class == BOUNDARY] == 0.0)
    assert np.all(f0.values[g.node_class == INTERIOR] == 0.0)
    fx = sample_boundary(g, lambda x, y: x)
    xg, _ = g.meshgrid()
    bm = g.node_class == BOUNDARY
    assert np.abs(fx.values[bm] - xg[bm]).max() == 0.0


def test_sample_boundary_disk_exact_at_crossings():
    g = build_grid(DomainShape.UNIT_DISK, 65)
    f = sample_boundary(g, lambda x, y: x ** 2 - y ** 2)
    exact = g.crossing_points[:, 0] ** 2 - g.crossing_points[:, 1] ** 2
    assert np.abs(f.crossing_values - exact).max() <= 1e-12


def test_interp_boundary_recovers_samples():
    g = build_grid(DomainShape.UNIT_DISK, 33)
    f = sample_boundary(g, lambda x, y: np.sin(3 * np.arctan2(y, x)))
    got = interp_boundary(f, g.crossing_points)
    assert np.abs(got - f.crossing_values).max() <= 1e-12


def test_interp_boundary_square_smooth():
    g = build_grid(DomainShape.UNIT_SQUARE, 33)
    f = sample_boundary(g, lambda x, y: x * x - y)
    pts = np.array([[0.512, 0.0], [1.0, 0.77], [0.3, 1.0], [0.0, 0.1]])
    got = interp_boundary(f, pts)
    exact = pts[:, 0] ** 2 - pts[:, 1]
    assert np.abs(got - exact).max() <= g.h ** 2


def test_conformability():
    g1 = build_grid(DomainShape.UNIT_SQUARE, 9)
    g2 = build_grid(DomainShape.UNIT_SQUARE, 9)
    a = constant_field(g1, 1.0)
    b = constant_field(g2, 1.0)
    with pytest.raises(ConfigurationError):
        conformable(a, b)
    conformable(a, constant_field(g1, 2.0))


def test_field_shape_validation():
    g = build_grid(DomainShape.UNIT_SQUARE, 9)
    with pytest.raises(ConfigurationError):
        ScalarField(g, np.zeros((3, 3)))


def test_csv_round_trip(tmp_path):
    g = build_grid(DomainShape.UNIT_SQUARE, 9)
    f = field_from_function(g, lambda x, y: np.sin(x) + y * y)
    path = tmp_path / "f.csv"
    save_field_csv(f, path)
    header = path.read_text().splitlines()[0]
    assert header == "x,y,class,value"
    back = load_field_csv(path)
    ok = g.node_class != EXTERIOR
    assert np.array_equal(back.values[ok], f.values[ok])


def test_json_round_trip_disk(tmp_path):
    g = build_grid(DomainShape.UNIT_DISK, 17)
    f = field_from_function(g, lambda x, y: x * y + 1.0)
    path = tmp_path / "f.json"
    save_field_json(f, path)
    back = load_field_json(path)
    ok = g.node_class != EXTERIOR
    assert np.array_equal(back.values[ok], f.values[ok])
    assert np.array_equal(back.crossing_values, f.crossing_values)

"""Uniform lattice discretization of the unit square and the unit disk.

The grid carries everything the finite-difference stencils need:

* node classification (interior / boundary / exterior),
* per-interior-node cell measures (area weights that sum to ``|Omega|_h``),
* an 8-arm stencil table per interior node.  Each arm points either at a
  lattice neighbour that holds a value, or at a point where the arm crosses
  the curved boundary (Shortley-Weller data: the fractional arm length and
  the crossing coordinates).

The square is sampled with ``n`` nodes per axis on ``[0, 1]``; the disk uses
the same spacing ``h = 1/(n-1)`` on the bounding box ``[-1, 1]^2`` (so the
lattice has ``2n - 1`` nodes per axis and the spacing matches the square's).
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .errors import ConfigurationError, GeometryError

INTERIOR = 0
BOUNDARY = 1
EXTERIOR = 2

# Arm order used throughout: E, W, N, S, NE, SW, NW, SE.
ARM_STEPS = np.array(
    [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (-1, -1), (-1, 1), (1, -1)],
    dtype=np.int64,
)
# (E,W), (N,S), (NE,SW), (NW,SE) pair up into second-difference axes.
ARM_PAIRS = ((0, 1), (2, 3), (4, 5), (6, 7))

_CLASS_NAMES = {INTERIOR: "interior", BOUNDARY: "boundary", EXTERIOR: "exterior"}


class DomainShape(enum.Enum):
    UNIT_SQUARE = "unit_square"
    UNIT_DISK = "unit_disk"

    @property
    def area(self) -> float:
        """Exact |Omega|: 1 for the square, pi for the disk."""
        return 1.0 if self is DomainShape.UNIT_SQUARE else math.pi


@dataclass(frozen=True, eq=False)
class DomainGrid:
    """Immutable uniform grid over a :class:`DomainShape`.

    ``values``-shaped arrays are indexed ``[iy, ix]`` with ``x = xs[ix]``,
    ``y = ys[iy]``.
    """

    shape: DomainShape
    n: int
    h: float
    xs: NDArray
    ys: NDArray
    node_class: NDArray          # (ny, nx) int8
    cell_measure: NDArray        # (ny, nx); zero off the interior
    interior_idx: NDArray        # (NI,) flat indices into (ny*nx)
    interior_x: NDArray
    interior_y: NDArray
    boundary_idx: NDArray        # (NB,) flat indices of boundary lattice nodes
    arm_idx: NDArray             # (8, NI) indices into the extended value vector
    arm_frac: NDArray            # (8, NI) fractional arm lengths in (0, 1]
    crossing_points: NDArray     # (NC, 2) circle crossings referenced by arms
    # boundary samples sorted by a 1-D parameter (angle on the disk,
    # perimeter arc length on the square), for interpolating Dirichlet data
    # at arbitrary boundary points:
    boundary_param: NDArray = field(repr=False, default=None)
    boundary_slot: NDArray = field(repr=False, default=None)

    @property
    def nx(self) -> int:
        return self.xs.size

    @property
    def ny(self) -> int:
        return self.ys.size

    @property
    def n_lattice(self) -> int:
        return self.nx * self.ny

    @property
    def n_interior(self) -> int:
        return self.interior_idx.size

    @property
    def n_crossings(self) -> int:
        return self.crossing_points.shape[0]

    @property
    def measure(self) -> float:
        """Discrete domain measure |Omega|_h = sum of cell measures."""
        return float(self.cell_measure.sum())

    @property
    def interior_mask(self) -> NDArray:
        return self.node_class == INTERIOR

    def meshgrid(self):
        return np.meshgrid(self.xs, self.ys, indexing="xy")

    def boundary_points(self) -> NDArray:
        """Coordinates of all boundary sample sites (lattice nodes then crossings)."""
        x, y = self.meshgrid()
        pts = np.column_stack(
            [x.ravel()[self.boundary_idx], y.ravel()[self.boundary_idx]]
        )
        return np.vstack([pts, self.crossing_points]) if self.n_crossings else pts


@dataclass(eq=False)
class ScalarField:
    """Real values on the nodes of a grid.

    ``values`` is a full-lattice array; exterior nodes hold NaN and are never
    read by the stencils.  On the disk, Dirichlet data at the stencil/boundary
    crossing points lives in ``crossing_values`` (indexed like
    ``grid.crossing_points``).
    """

    grid: DomainGrid
    values: NDArray
    crossing_values: NDArray | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (self.grid.ny, self.grid.nx):
            raise ConfigurationError(
                f"field shape {self.values.shape} does not match grid "
                f"({self.grid.ny}, {self.grid.nx})"
            )
        if self.crossing_values is None and self.grid.n_crossings:
            self.crossing_values = np.zeros(self.grid.n_crossings)
        if self.crossing_values is not None:
            self.crossing_values = np.asarray(self.crossing_values, dtype=np.float64)
            if self.crossing_values.size != self.grid.n_crossings:
                raise ConfigurationError("crossing_values does not match grid")

    def copy(self) -> "ScalarField":
        cv = None if self.crossing_values is None else self.crossing_values.copy()
        return ScalarField(self.grid, self.values.copy(), cv)

    @property
    def interior(self) -> NDArray:
        """Compact (NI,) view of the interior values."""
        return self.values.ravel()[self.grid.interior_idx]

    def with_interior(self, new_interior: NDArray) -> "ScalarField":
        out = self.copy()
        out.values.ravel()[self.grid.interior_idx] = new_interior
        return out

    def extended(self) -> NDArray:
        """Concatenated [lattice values, crossing values] vector for arm gathers."""
        if self.grid.n_crossings:
            return np.concatenate([self.values.ravel(), self.crossing_values])
        return self.values.ravel()

    def check_finite(self):
        ok = self.node_ok_mask()
        if not np.isfinite(self.values[ok]).all():
            raise ConfigurationError("field has non-finite interior/boundary values")
        if self.crossing_values is not None and not np.isfinite(self.crossing_values).all():
            raise ConfigurationError("field has non-finite boundary crossing values")

    def node_ok_mask(self) -> NDArray:
        return self.grid.node_class != EXTERIOR


def conformable(a: ScalarField, b: ScalarField) -> None:
    if a.grid is not b.grid:
        raise ConfigurationError("fields live on different grids")


def build_grid(shape: DomainShape, n: int) -> DomainGrid:
    """Discretize the domain with spacing ``h = 1/(n-1)``.

    Raises :class:`ConfigurationError` for ``n < 8``.
    """
    if not isinstance(shape, DomainShape):
        shape = DomainShape(shape)
    n = int(n)
    if n < 8:
        raise ConfigurationError(f"need n >= 8 nodes per axis, got {n}")
    h = 1.0 / (n - 1)
    if shape is DomainShape.UNIT_SQUARE:
        return _build_square(n, h)
    return _build_disk(n, h)


def _finalize(shape, n, h, xs, ys, node_class, cell_measure, arm_idx, arm_frac,
              crossings, boundary_param, boundary_slot):
    interior_flat = np.flatnonzero(node_class.ravel() == INTERIOR)
    boundary_flat = np.flatnonzero(node_class.ravel() == BOUNDARY)
    xg, yg = np.meshgrid(xs, ys, indexing="xy")
    for arr in (xs, ys, node_class, cell_measure, arm_idx, arm_frac, crossings):
        arr.setflags(write=False)
    return DomainGrid(
        shape=shape, n=n, h=h, xs=xs, ys=ys,
        node_class=node_class, cell_measure=cell_measure,
        interior_idx=interior_flat,
        interior_x=xg.ravel()[interior_flat],
        interior_y=yg.ravel()[interior_flat],
        boundary_idx=boundary_flat,
        arm_idx=arm_idx, arm_frac=arm_frac, crossing_points=crossings,
        boundary_param=boundary_param, boundary_slot=boundary_slot,
    )


def _build_square(n: int, h: float) -> DomainGrid:
    xs = np.linspace(0.0, 1.0, n)
    ys = np.linspace(0.0, 1.0, n)
    node_class = np.full((n, n), INTERIOR, dtype=np.int8)
    node_class[0, :] = node_class[-1, :] = BOUNDARY
    node_class[:, 0] = node_class[:, -1] = BOUNDARY
    cell_measure = np.where(node_class == INTERIOR, h * h, 0.0)

    interior_flat = np.flatnonzero(node_class.ravel() == INTERIOR)
    iy, ix = np.divmod(interior_flat, n)
    ni = interior_flat.size
    arm_idx = np.empty((8, ni), dtype=np.int64)
    arm_frac = np.ones((8, ni))
    for a, (dx, dy) in enumerate(ARM_STEPS):
        arm_idx[a] = (iy + dy) * n + (ix + dx)   # neighbours always on-lattice

    # Boundary parameterized by perimeter arc length, counterclockwise from (0,0).
    bflat = np.flatnonzero(node_class.ravel() == BOUNDARY)
    bx = xs[bflat % n]
    by = ys[bflat // n]
    param = _square_perimeter_param(bx, by)
    order = np.argsort(param, kind="stable")
    return _finalize(
        DomainShape.UNIT_SQUARE, n, h, xs, ys, node_class, cell_measure,
        arm_idx, arm_frac, np.zeros((0, 2)),
        boundary_param=param[order], boundary_slot=bflat[order],
    )


def _square_perimeter_param(bx, by):
    """Arc length along the unit-square boundary, counterclockwise from the origin.

    Points are assigned to their nearest edge, so coordinates that are only
    floating-point close to an edge (clipped stencil arms) parameterize
    correctly; the corner values agree from both adjacent edges.
    """
    bx = np.clip(np.asarray(bx, dtype=float), 0.0, 1.0)
    by = np.clip(np.asarray(by, dtype=float), 0.0, 1.0)
    side = np.argmin(np.stack([by, 1.0 - bx, 1.0 - by, bx]), axis=0)
    return np.choose(side, [bx, 1.0 + by, 3.0 - bx, 4.0 - by])


def _build_disk(n: int, h: float) -> DomainGrid:
    m = n - 1                       # node index range is -m..m per axis
    idx = np.arange(-m, m + 1)
    xs = idx * h
    ys = idx * h
    # Classify on integer indices so lattice points exactly on the circle
    # (i^2 + j^2 == m^2, e.g. the four axis points) are found without
    # floating-point ambiguity.
    ii, jj = np.meshgrid(idx, idx, indexing="xy")   # jj rows = y, ii cols = x
    r2_int = ii.astype(np.int64) ** 2 + jj.astype(np.int64) ** 2
    node_class = np.full((2 * m + 1, 2 * m + 1), EXTERIOR, dtype=np.int8)
    node_class[r2_int < m * m] = INTERIOR
    node_class[r2_int == m * m] = BOUNDARY

    cell_measure = _disk_cell_measures(xs, ys, node_class, h)

    interior_flat = np.flatnonzero(node_class.ravel() == INTERIOR)
    nxn = xs.size
    iy, ix = np.divmod(interior_flat, nxn)
    px = xs[ix]
    py = ys[iy]
    ni = interior_flat.size

    arm_idx = np.empty((8, ni), dtype=np.int64)
    arm_frac = np.ones((8, ni))
    crossings = []
    for a, (dx, dy) in enumerate(ARM_STEPS):
        njx = ix + dx
        njy = iy + dy
        nb_flat = njy * nxn + njx
        nb_class = node_class.ravel()[nb_flat]
        arm_idx[a] = nb_flat
        clipped = np.flatnonzero(nb_class == EXTERIOR)
        if clipped.size:
            t = _circle_crossing_frac(px[clipped], py[clipped], dx * h, dy * h)
            cx = px[clipped] + t * dx * h
            cy = py[clipped] + t * dy * h
            base = nxn * nxn + sum(c.shape[0] for c in crossings)
            arm_idx[a, clipped] = base + np.arange(clipped.size)
            arm_frac[a, clipped] = t
            crossings.append(np.column_stack([cx, cy]))
    crossings = np.vstack(crossings) if crossings else np.zeros((0, 2))

    # Boundary samples sorted by angle; lattice hits first, then crossings.
    bflat = np.flatnonzero(node_class.ravel() == BOUNDARY)
    bang = np.arctan2(ys[bflat // nxn], xs[bflat % nxn])
    cang = np.arctan2(crossings[:, 1], crossings[:, 0]) if crossings.size else np.zeros(0)
    param = np.concatenate([bang, cang])
    slots = np.concatenate([bflat, nxn * nxn + np.arange(crossings.shape[0])])
    order = np.argsort(param, kind="stable")
    return _finalize(
        DomainShape.UNIT_DISK, n, h, xs, ys, node_class, cell_measure,
        arm_idx, arm_frac, crossings,
        boundary_param=param[order], boundary_slot=slots[order],
    )


def _disk_cell_measures(xs, ys, node_class, h):
    """h^2 per interior cell, clipped by a 4x4 subsampled in/out test."""
    measure = np.zeros((ys.size, xs.size))
    iy, ix = np.nonzero(node_class == INTERIOR)
    px = xs[ix]
    py = ys[iy]
    sub = (np.arange(4) + 0.5) / 4.0 - 0.5          # midpoints of 4 subcells
    qx = px[:, None, None] + sub[None, :, None] * h
    qy = py[:, None, None] + sub[None, None, :] * h
    inside = (qx * qx + qy * qy) < 1.0
    measure[iy, ix] = h * h * inside.reshape(px.size, 16).mean(axis=1)
    return measure


def _circle_crossing_frac(px, py, vx, vy):
    """Fraction t in (0, 1] where the segment p + t*(vx, vy) meets |q| = 1."""
    a = vx * vx + vy * vy
    b = px * vx + py * vy
    c = px * px + py * py - 1.0
    disc = b * b - a * c
    if np.any(disc < 0.0):
        raise GeometryError("stencil arm does not reach the circle")
    t = (-b + np.sqrt(disc)) / a
    if np.any(t <= 0.0) or np.any(t > 1.0 + 1e-12):
        raise GeometryError("circle crossing outside the stencil arm")
    return np.minimum(t, 1.0)


def sample_boundary(grid: DomainGrid, psi) -> ScalarField:
    """Evaluate Dirichlet data on all boundary sample sites of the grid.

    ``psi`` is ``psi(x, y)`` accepting arrays.  Interior values are filled
    with the plain average of the boundary samples (a cheap initial guess;
    the solvers overwrite it), exterior nodes with NaN.
    """
    xg, yg = grid.meshgrid()
    values = np.full((grid.ny, grid.nx), np.nan)
    bmask = grid.node_class == BOUNDARY
    values[bmask] = np.asarray(psi(xg[bmask], yg[bmask]), dtype=np.float64)
    if grid.n_crossings:
        cv = np.asarray(
            psi(grid.crossing_points[:, 0], grid.crossing_points[:, 1]),
            dtype=np.float64,
        )
    else:
        cv = None
    samples = values[bmask]
    if cv is not None:
        samples = np.concatenate([samples, cv])
    if not np.isfinite(samples).all():
        raise ConfigurationError("boundary data evaluated to non-finite values")
    fill = samples.mean() if samples.size else 0.0
    values[grid.node_class == INTERIOR] = fill
    return ScalarField(grid, values, cv)


def boundary_average(field: ScalarField) -> float:
    """Mean of all boundary samples of the field."""
    g = field.grid
    vals = field.values.ravel()[g.boundary_idx]
    if g.n_crossings:
        vals = np.concatenate([vals, field.crossing_values])
    return float(vals.mean()) if vals.size else 0.0


def interp_boundary(field: ScalarField, pts: NDArray) -> NDArray:
    """Dirichlet data at arbitrary boundary points by 1-D periodic interpolation.

    Points are projected onto the boundary parameter (angle for the disk,
    perimeter arc length for the square) and interpolated among the field's
    stored boundary samples.
    """
    g = field.grid
    ext = field.extended()
    sample_vals = ext[g.boundary_slot]
    if g.shape is DomainShape.UNIT_DISK:
        param = np.arctan2(pts[:, 1], pts[:, 0])
        period = 2.0 * math.pi
        base = g.boundary_param
    else:
        param = _square_perimeter_param(
            np.clip(pts[:, 0], 0.0, 1.0), np.clip(pts[:, 1], 0.0, 1.0)
        )
        period = 4.0
        base = g.boundary_param
    # periodic np.interp: extend one sample on each side
    xp = np.concatenate([base - period, base, base + period])
    fp = np.tile(sample_vals, 3)
    return np.interp(param, xp, fp)


def constant_field(grid: DomainGrid, value: float) -> ScalarField:
    """A field equal to ``value`` on interior and boundary nodes."""
    vals = np.full((grid.ny, grid.nx), np.nan)
    ok = grid.node_class != EXTERIOR
    vals[ok] = value
    cv = np.full(grid.n_crossings, value) if grid.n_crossings else None
    return ScalarField(grid, vals, cv)


def field_from_function(grid: DomainGrid, fn) -> ScalarField:
    """Evaluate ``fn(x, y)`` on interior+boundary nodes and crossings."""
    xg, yg = grid.meshgrid()
    vals = np.full((grid.ny, grid.nx), np.nan)
    ok = grid.node_class != EXTERIOR
    vals[ok] = np.asarray(fn(xg[ok], yg[ok]), dtype=np.float64)
    cv = None
    if grid.n_crossings:
        cv = np.asarray(
            fn(grid.crossing_points[:, 0], grid.crossing_points[:, 1]),
            dtype=np.float64,
        )
    return ScalarField(grid, vals, cv)


# ---------------------------------------------------------------------------
# Serialization: CSV with header x,y,class,value (row-major nodes) and a JSON
# variant that carries grid metadata and survives disk round trips.
# ---------------------------------------------------------------------------

def save_field_csv(field: ScalarField, path) -> None:
    g = field.grid
    xg, yg = g.meshgrid()
    cls = g.node_class.ravel()
    vals = field.values.ravel()
    with open(path, "w") as fh:
        fh.write("x,y,class,value\n")
        for x, y, c, v in zip(xg.ravel(), yg.ravel(), cls, vals):
            sval = "" if c == EXTERIOR else f"{v:.17g}"
            fh.write(f"{x:.17g},{y:.17g},{_CLASS_NAMES[int(c)]},{sval}\n")


def save_field_json(field: ScalarField, path) -> None:
    g = field.grid
    payload = {
        "shape": g.shape.value,
        "n": g.n,
        "h": g.h,
        "values": [
            None if not np.isfinite(v) else v for v in field.values.ravel().tolist()
        ],
    }
    if g.n_crossings:
        payload["crossing_values"] = field.crossing_values.tolist()
    with open(path, "w") as fh:
        json.dump(payload, fh)


def load_field_json(path, grid: DomainGrid | None = None) -> ScalarField:
    with open(path) as fh:
        payload = json.load(fh)
    if grid is None:
        grid = build_grid(DomainShape(payload["shape"]), payload["n"])
    vals = np.array(
        [np.nan if v is None else v for v in payload["values"]]
    ).reshape(grid.ny, grid.nx)
    cv = np.asarray(payload.get("crossing_values", []), dtype=np.float64)
    return ScalarField(grid, vals, cv if cv.size else None)


def load_field_csv(path, grid: DomainGrid | None = None) -> ScalarField:
    """Load the CSV field format, inferring the grid when not given.

    Square fields round-trip fully through CSV.  Disk fields lose their
    boundary-crossing samples (use the JSON format for those); missing
    crossings are filled with zeros.
    """
    xs, ys, classes, vals = [], [], [], []
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "x,y,class,value":
            raise ConfigurationError(f"unexpected field CSV header: {header!r}")
        for line in fh:
            x, y, c, v = line.rstrip("\n").split(",")
            xs.append(float(x))
            ys.append(float(y))
            classes.append(c)
            vals.append(float(v) if v else np.nan)
    xs = np.asarray(xs)
    if grid is None:
        uniq = np.unique(xs)
        if uniq.min() < -0.5:
            grid = build_grid(DomainShape.UNIT_DISK, (uniq.size + 1) // 2)
        else:
            grid = build_grid(DomainShape.UNIT_SQUARE, uniq.size)
    values = np.asarray(vals).reshape(grid.ny, grid.nx)
    return ScalarField(grid, values)

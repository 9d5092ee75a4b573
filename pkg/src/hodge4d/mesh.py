"""Structured 4D tensor-product mesh of the space-time box (0,T) x Omega.

The mesh is a lattice of 4-rectangles. Entities of dimension k (nodes,
edges, faces, 3-cells, 4-cells) are grouped into orientation classes: the
tuple of axes an entity extends along. Global ids are computed
arithmetically from the lattice index (orientation-major, axis order
t,x,y,z), so the mesh stores no adjacency lists and lookups are O(1).

Axis order is always (t, x, y, z). Face classes are ordered to match the
2-form component convention used throughout the package:
(dt^dx, dt^dy, dt^dz, dy^dz, dz^dx, dx^dy).

A Mesh4 is immutable after construction and safe for concurrent reads.
"""

from __future__ import annotations

import numpy as np

AXES = ("t", "x", "y", "z")
T_AXIS, X_AXIS, Y_AXIS, Z_AXIS = 0, 1, 2, 3

#: orientation classes per entity dimension; the tuple order inside a face
#: class encodes its orientation (e.g. (Z_AXIS, X_AXIS) means dz^dx)
ENTITY_CLASSES = {
    0: ((),),
    1: ((T_AXIS,), (X_AXIS,), (Y_AXIS,), (Z_AXIS,)),
    2: (
        (T_AXIS, X_AXIS),
        (T_AXIS, Y_AXIS),
        (T_AXIS, Z_AXIS),
        (Y_AXIS, Z_AXIS),
        (Z_AXIS, X_AXIS),
        (X_AXIS, Y_AXIS),
    ),
    3: (
        (T_AXIS, X_AXIS, Y_AXIS),
        (T_AXIS, X_AXIS, Z_AXIS),
        (T_AXIS, Y_AXIS, Z_AXIS),
        (X_AXIS, Y_AXIS, Z_AXIS),
    ),
    4: ((T_AXIS, X_AXIS, Y_AXIS, Z_AXIS),),
}

INTERIOR = "interior"
LATERAL = "lateral"


class Mesh4:
    """Tensor-product mesh of Q = (0,T) x (0,Lx) x (0,Ly) x (0,Lz).

    Parameters
    ----------
    divisions : sequence of 4 ints
        Cells per axis (n_t, n_x, n_y, n_z), all >= 1.
    extents : sequence of 4 floats
        Box lengths (T, L_x, L_y, L_z), all > 0.
    time_periodic : bool
        Identify the t=T node layer with t=0. Requires n_t >= 2.
    regions : dict, optional
        Named axis-aligned boxes ``{name: ((t0,t1),(x0,x1),(y0,y1),(z0,z1))}``
        used to tag lateral entities. An entity belongs to a region iff its
        closure lies inside the box.
    """

    def __init__(self, divisions, extents, time_periodic=False, regions=None):
        divisions = tuple(int(n) for n in divisions)
        extents = tuple(float(e) for e in extents)
        if len(divisions) != 4 or len(extents) != 4:
            raise ValueError("divisions and extents must have length 4")
        if any(n < 1 for n in divisions):
            raise ValueError(f"divisions must be >= 1, got {divisions}")
        if any(not (e > 0.0) for e in extents):
            raise ValueError(f"extents must be > 0, got {extents}")
        if time_periodic and divisions[T_AXIS] < 2:
            raise ValueError("time_periodic requires n_t >= 2 (n_t = 1 would be self-adjacent)")

        self.divisions = divisions
        self.extents = extents
        self.spacings = tuple(e / n for e, n in zip(extents, divisions))
        self.time_periodic = bool(time_periodic)
        self.regions = dict(regions) if regions else {}

        # per-axis lattice sizes: "along" = cell count, "level" = node layer count
        self._along = np.asarray(divisions, dtype=np.int64)
        levels = [n + 1 for n in divisions]
        if self.time_periodic:
            levels[T_AXIS] = divisions[T_AXIS]
        self._levels = np.asarray(levels, dtype=np.int64)

        # per (dim, class): lattice shape, block offset, block size
        self._shapes = {}
        self._offsets = {}
        self._counts = np.zeros(5, dtype=np.int64)
        for dim, classes in ENTITY_CLASSES.items():
            offset = 0
            for cls in classes:
                shape = np.where(
                    np.isin(np.arange(4), cls), self._along, self._levels
                ).astype(np.int64)
                self._shapes[(dim, cls)] = shape
                self._offsets[(dim, cls)] = offset
                offset += int(np.prod(shape))
            self._counts[dim] = offset

        self._cell_tables = {}

    # ------------------------------------------------------------------
    # basic queries
    # ------------------------------------------------------------------

    @property
    def h(self):
        """Mesh size parameter: the maximum cell edge length."""
        return max(self.spacings)

    @property
    def n_cells(self):
        return int(self._counts[4])

    def entity_count(self, dim):
        if dim not in ENTITY_CLASSES:
            raise ValueError(f"dimension must be in 0..4, got {dim}")
        return int(self._counts[dim])

    def class_count(self, dim, cls):
        """Number of entities in one orientation class."""
        return int(np.prod(self._shapes[(dim, tuple(cls))]))

    def class_offset(self, dim, cls):
        return self._offsets[(dim, tuple(cls))]

    def entity_id(self, dim, cls, index):
        """Global id of the entity of class `cls` at lattice `index`.

        `index` is an int array of shape (..., 4). Along extended axes the
        index must lie in [0, n_a); transverse indices are level indices and,
        for a periodic time axis, are reduced modulo the level count.
        """
        cls = tuple(cls)
        index = np.asarray(index, dtype=np.int64).copy()
        shape = self._shapes[(dim, cls)]
        if self.time_periodic and T_AXIS not in cls:
            index[..., T_AXIS] %= shape[T_AXIS]
        if np.any(index < 0) or np.any(index >= shape):
            raise ValueError(f"lattice index out of range for class {cls}")
        gid = index[..., 0]
        for a in range(1, 4):
            gid = gid * shape[a] + index[..., a]
        return gid + self._offsets[(dim, cls)]

    def entity_class_index(self, dim, gid):
        """Inverse of entity_id: returns (class, lattice index (4,))."""
        gid = int(gid)
        if gid < 0 or gid >= self._counts[dim]:
            raise ValueError(f"unknown entity id {gid} for dimension {dim}")
        for cls in ENTITY_CLASSES[dim]:
            off = self._offsets[(dim, cls)]
            size = int(np.prod(self._shapes[(dim, cls)]))
            if off <= gid < off + size:
                idx = np.array(
                    np.unravel_index(gid - off, self._shapes[(dim, cls)]),
                    dtype=np.int64,
                )
                return cls, idx
        raise AssertionError("unreachable")

    # ------------------------------------------------------------------
    # geometry
    # ------------------------------------------------------------------

    def entity_bounds(self, dim, gid):
        """Closure of an entity as per-axis [lo, hi] (degenerate transversally)."""
        cls, idx = self.entity_class_index(dim, gid)
        lo = idx * np.asarray(self.spacings)
        hi = lo.copy()
        for a in cls:
            hi[a] += self.spacings[a]
        return np.stack([lo, hi], axis=-1)

    def entity_midpoint(self, dim, gid):
        b = self.entity_bounds(dim, gid)
        return 0.5 * (b[:, 0] + b[:, 1])

    def class_midpoints(self, dim, cls):
        """Midpoints of all entities of one class, ordered by id (m, 4)."""
        cls = tuple(cls)
        shape = self._shapes[(dim, cls)]
        axes_1d = []
        for a in range(4):
            d = self.spacings[a]
            if a in cls:
                axes_1d.append((np.arange(shape[a]) + 0.5) * d)
            else:
                axes_1d.append(np.arange(shape[a]) * d)
        grids = np.meshgrid(*axes_1d, indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=-1)

    # ------------------------------------------------------------------
    # boundary classification
    # ------------------------------------------------------------------

    def is_lateral(self, dim, gid):
        """True iff the entity lies in (0,T) x dOmega.

        The time-extreme hyperplanes t=0 and t=T are not lateral boundary.
        """
        cls, idx = self.entity_class_index(dim, gid)
        return self._lateral_from_index(cls, idx)

    def _lateral_from_index(self, cls, idx):
        for a in (X_AXIS, Y_AXIS, Z_AXIS):
            if a in cls:
                continue
            if idx[..., a] == 0 or idx[..., a] == self.divisions[a]:
                return True
        return False

    def lateral_mask(self, dim):
        """Boolean mask over all entities of dimension `dim` (vectorized)."""
        mask = np.zeros(self.entity_count(dim), dtype=bool)
        for cls in ENTITY_CLASSES[dim]:
            shape = self._shapes[(dim, cls)]
            sub = np.zeros(tuple(shape), dtype=bool)
            for a in (X_AXIS, Y_AXIS, Z_AXIS):
                if a in cls:
                    continue
                sl = [slice(None)] * 4
                sl[a] = 0
                sub[tuple(sl)] = True
                sl[a] = self.divisions[a]
                sub[tuple(sl)] = True
            off = self._offsets[(dim, cls)]
            mask[off : off + sub.size] = sub.ravel()
        return mask

    def region_tag(self, dim, gid):
        """Name of the first region containing the entity closure, or None."""
        bounds = self.entity_bounds(dim, gid)
        for name, box in self.regions.items():
            if _closure_in_box(bounds, box):
                return name
        return None

    def region_mask(self, dim, cls, box):
        """Mask over one entity class: closure contained in `box` (vectorized)."""
        cls = tuple(cls)
        shape = self._shapes[(dim, cls)]
        mask = np.ones(tuple(shape), dtype=bool)
        for a in range(4):
            d = self.spacings[a]
            lo = np.arange(shape[a]) * d
            hi = lo + (d if a in cls else 0.0)
            eps = 1e-12 * max(self.extents)
            ok = (lo >= box[a][0] - eps) & (hi <= box[a][1] + eps)
            sl = [None] * 4
            sl[a] = slice(None)
            mask &= ok[tuple(sl)]
        return mask.ravel()

    # ------------------------------------------------------------------
    # cell incidence tables (built lazily, cached)
    # ------------------------------------------------------------------

    def cell_lattice(self):
        """Lattice indices of all 4-cells, ordered by cell id: (n_cells, 4)."""
        grids = np.meshgrid(*[np.arange(n) for n in self.divisions], indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=-1)

    def cell_origins(self):
        """Low-corner coordinates of all 4-cells: (n_cells, 4)."""
        return self.cell_lattice() * np.asarray(self.spacings)

    def cell_nodes(self):
        """Global node ids per cell, local order = (x,y,z,t) corner bits: (n_cells, 16)."""
        return self._table("nodes", self._build_cell_nodes)

    def cell_edges(self):
        """Global edge ids per cell, local order matching the 32 reference
        edge functions (8 time-directed, then 8 each along x, y, z): (n_cells, 32)."""
        return self._table("edges", self._build_cell_edges)

    def cell_faces(self):
        """Global face ids per cell, local order = 6 orientation classes
        (tx,ty,tz,yz,zx,xy) x 4 transverse corners: (n_cells, 24)."""
        return self._table("faces", self._build_cell_faces)

    def _table(self, key, builder):
        if key not in self._cell_tables:
            self._cell_tables[key] = builder()
        return self._cell_tables[key]

    def _shifted(self, lat, shifts):
        out = lat.copy()
        for a, s in enumerate(shifts):
            out[:, a] += s
        return out

    def _build_cell_nodes(self):
        lat = self.cell_lattice()
        cols = []
        for j in range(16):
            bx, by, bz, bt = j & 1, (j >> 1) & 1, (j >> 2) & 1, (j >> 3) & 1
            cols.append(self.entity_id(0, (), self._shifted(lat, (bt, bx, by, bz))))
        return np.stack(cols, axis=-1)

    def _build_cell_edges(self):
        lat = self.cell_lattice()
        cols = []
        for l in range(8):  # time-directed, bits (x,y,z)
            bx, by, bz = l & 1, (l >> 1) & 1, (l >> 2) & 1
            cols.append(self.entity_id(1, (T_AXIS,), self._shifted(lat, (0, bx, by, bz))))
        for l in range(8):  # x-directed, bits (y,z,t)
            by, bz, bt = l & 1, (l >> 1) & 1, (l >> 2) & 1
            cols.append(self.entity_id(1, (X_AXIS,), self._shifted(lat, (bt, 0, by, bz))))
        for l in range(8):  # y-directed, bits (z,x,t)
            bz, bx, bt = l & 1, (l >> 1) & 1, (l >> 2) & 1
            cols.append(self.entity_id(1, (Y_AXIS,), self._shifted(lat, (bt, bx, 0, bz))))
        for l in range(8):  # z-directed, bits (x,y,t)
            bx, by, bt = l & 1, (l >> 1) & 1, (l >> 2) & 1
            cols.append(self.entity_id(1, (Z_AXIS,), self._shifted(lat, (bt, bx, by, 0))))
        return np.stack(cols, axis=-1)

    def _build_cell_faces(self):
        lat = self.cell_lattice()
        # transverse axis pairs per class, in (t,x,y,z) order
        transverse = {
            (T_AXIS, X_AXIS): (Y_AXIS, Z_AXIS),
            (T_AXIS, Y_AXIS): (X_AXIS, Z_AXIS),
            (T_AXIS, Z_AXIS): (X_AXIS, Y_AXIS),
            (Y_AXIS, Z_AXIS): (T_AXIS, X_AXIS),
            (Z_AXIS, X_AXIS): (T_AXIS, Y_AXIS),
            (X_AXIS, Y_AXIS): (T_AXIS, Z_AXIS),
        }
        cols = []
        for cls in ENTITY_CLASSES[2]:
            a1, a2 = transverse[cls]
            for m in range(4):
                b0, b1 = m & 1, (m >> 1) & 1
                shifts = [0, 0, 0, 0]
                shifts[a1] = b0
                shifts[a2] = b1
                cols.append(self.entity_id(2, cls, self._shifted(lat, shifts)))
        return np.stack(cols, axis=-1)

    def __repr__(self):
        per = "periodic-t" if self.time_periodic else "non-periodic"
        return f"Mesh4(divisions={self.divisions}, extents={self.extents}, {per})"


def _closure_in_box(bounds, box, rel_eps=1e-12):
    scale = max(abs(b) for pair in box for b in pair) or 1.0
    eps = rel_eps * scale
    return all(
        bounds[a, 0] >= box[a][0] - eps and bounds[a, 1] <= box[a][1] + eps
        for a in range(4)
    )


def build_mesh(divisions, extents, time_periodic=False, regions=None):
    """Build an immutable Mesh4; see Mesh4 for argument semantics."""
    return Mesh4(divisions, extents, time_periodic=time_periodic, regions=regions)


def entity_count(mesh, dimension):
    """Number of entities of the given dimension (0..4)."""
    return mesh.entity_count(dimension)


def classify_boundary(mesh, entity_id, dimension):
    """Classify an entity as interior or lateral.

    Returns ``("interior", None)`` or ``("lateral", tag)`` where `tag` is the
    name of the first region containing the entity closure (None if untagged).
    """
    if mesh.is_lateral(dimension, entity_id):
        return (LATERAL, mesh.region_tag(dimension, entity_id))
    return (INTERIOR, None)

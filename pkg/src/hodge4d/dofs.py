"""Global degree-of-freedom management and discrete derivative operators.

A DofMap numbers the degrees of freedom of a discrete k-form: one per node
(k=0), edge (k=1) or face (k=2), in mesh entity-id order. Essential boundary
conditions are realized as a constrained mask over the lateral-boundary
entities plus a lifting vector holding prescribed values; solves work on the
free DOFs and lifting is re-attached afterwards.

Sparse operators are scipy CSR matrices over the *full* DOF numbering; the
reduction to free DOFs happens in the assembly layer. The global derivative
matrices are scattered from the exact per-cell derivative coefficients, so
D1 @ D0 vanishes entry-wise in floating point.

DofMaps and assembled operators are immutable after construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import elements
from .mesh import Mesh4

BC_LATERAL = "lateral"
BC_NONE = "none"

_CLASS_NAMES = {
    (): (),
    (0,): ("t",),
    (1,): ("x",),
    (2,): ("y",),
    (3,): ("z",),
}


@dataclass(frozen=True)
class DofMap:
    """Global numbering of k-form DOFs with boundary constraints.

    constrained[i] is True for DOFs fixed by the essential boundary
    condition; lifting[i] holds the prescribed value there (zero on free
    DOFs). free_ids maps free-DOF rank to entity id; free_rank is the
    inverse (-1 on constrained entities).
    """

    mesh: Mesh4
    degree: int
    constrained: np.ndarray
    lifting: np.ndarray
    free_ids: np.ndarray = field(init=False)
    free_rank: np.ndarray = field(init=False)

    def __post_init__(self):
        free_ids = np.flatnonzero(~self.constrained)
        free_rank = np.full(self.total, -1, dtype=np.int64)
        free_rank[free_ids] = np.arange(free_ids.size)
        object.__setattr__(self, "free_ids", free_ids)
        object.__setattr__(self, "free_rank", free_rank)

    @property
    def total(self):
        return self.constrained.size

    @property
    def n_free(self):
        return int(self.free_ids.size)

    def expand(self, free_values, with_lifting=True):
        """Full coefficient vector from free values (+ lifting on constrained)."""
        full = self.lifting.copy() if with_lifting else np.zeros(self.total)
        full[self.free_ids] = free_values
        return full

    def restrict(self, full_values):
        return np.asarray(full_values)[self.free_ids]


def build_dofmap(mesh, degree, bc=BC_LATERAL, lifting=None):
    """Build the DofMap of a discrete k-form, k in {0, 1, 2}.

    For bc="lateral" the constrained set is exactly the lateral-boundary
    entities of that degree: all boundary nodes for 0-forms (zero spatial
    trace), and for 1-forms the time-directed edges sitting on boundary
    nodes plus the spatial edges lying inside a lateral face (zero
    tangential trace). 2-forms are never constrained.

    `lifting`, if given, is a callable ``f(points, kind) -> values`` applied
    per orientation class of the constrained entities, where `points` are
    the entity midline midpoints (shape (m, 4), order t,x,y,z) and `kind`
    is the tuple of axis names the entity extends along (() for nodes,
    ("t",) for time edges, ("x",), ...). Missing/non-finite lifting values
    are rejected.
    """
    if degree not in (0, 1, 2):
        raise ValueError(f"degree must be 0, 1 or 2, got {degree}")
    if bc not in (BC_LATERAL, BC_NONE):
        raise ValueError(f"unknown bc spec {bc!r}")

    n = mesh.entity_count(degree)
    if bc == BC_NONE or degree == 2:
        constrained = np.zeros(n, dtype=bool)
    else:
        constrained = mesh.lateral_mask(degree)

    lift = np.zeros(n)
    if lifting is not None:
        from .mesh import ENTITY_CLASSES

        for cls in ENTITY_CLASSES[degree]:
            off = mesh.class_offset(degree, cls)
            size = mesh.class_count(degree, cls)
            sel = np.flatnonzero(constrained[off : off + size]) + off
            if sel.size == 0:
                continue
            pts = mesh.class_midpoints(degree, cls)[sel - off]
            vals = np.asarray(lifting(pts, _CLASS_NAMES[cls]), dtype=float)
            if vals.shape != (sel.size,):
                raise ValueError("lifting callable returned wrong shape")
            if not np.all(np.isfinite(vals)):
                raise ValueError("lifting callable returned non-finite values")
            lift[sel] = vals
    return DofMap(mesh=mesh, degree=degree, constrained=constrained, lifting=lift)


@dataclass(frozen=True)
class FormVector:
    """Coefficient vector of a discrete k-form relative to a DofMap."""

    degree: int
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))


# ----------------------------------------------------------------------
# sparse scatter helpers
# ----------------------------------------------------------------------


def scatter_sum(row_gids, col_gids, local, shape, chunk=4096):
    """Sum-scatter one local matrix over all cells: CSR of given shape.

    row_gids/col_gids are (n_cells, r) and (n_cells, c) gather tables and
    `local` the shared (r, c) per-cell matrix of a uniform mesh.
    """
    n_cells = row_gids.shape[0]
    out = sp.csr_matrix(shape)
    flat = local.ravel()
    for start in range(0, n_cells, chunk):
        r = row_gids[start : start + chunk]
        c = col_gids[start : start + chunk]
        m = r.shape[0]
        rows = np.repeat(r, local.shape[1], axis=1).ravel()
        cols = np.tile(c, (1, local.shape[0])).ravel()
        vals = np.tile(flat, m)
        out = out + sp.coo_matrix((vals, (rows, cols)), shape=shape).tocsr()
    out.sum_duplicates()
    out.sort_indices()
    return out


def scatter_once(row_gids, col_gids, local, shape):
    """Scatter a local coefficient matrix whose entries repeat identically
    across cells (derivative matrices): duplicates keep the first value."""
    nz_r, nz_c = np.nonzero(local)
    rows = row_gids[:, nz_r].ravel()
    cols = col_gids[:, nz_c].ravel()
    vals = np.tile(local[nz_r, nz_c], row_gids.shape[0])
    key = rows * shape[1] + cols
    _, first = np.unique(key, return_index=True)
    out = sp.coo_matrix((vals[first], (rows[first], cols[first])), shape=shape).tocsr()
    out.sort_indices()
    return out


# ----------------------------------------------------------------------
# global derivative operators
# ----------------------------------------------------------------------


def assemble_D0(mesh, dof0, dof1):
    """Global derivative from 0-forms to 1-forms (full numbering).

    Rows of time-directed edges vanish; the row of a spatial edge carries
    -+1/spacing on its two endpoint nodes. Exact for multilinear fields.
    """
    _check_same_mesh(mesh, dof0, dof1)
    d0 = elements.local_d0(mesh.spacings)
    return scatter_once(
        mesh.cell_edges(), mesh.cell_nodes(), d0, (dof1.total, dof0.total)
    )


def assemble_D1(mesh, dof1, dof2):
    """Global derivative from 1-forms to 2-forms (full numbering).

    Time-like face rows couple only time-edge DOFs (spatial gradient of the
    dt part); spatial face rows couple only spatial-edge DOFs (spatial rot).
    """
    _check_same_mesh(mesh, dof1, dof2)
    d1 = elements.local_d1(mesh.spacings)
    return scatter_once(
        mesh.cell_faces(), mesh.cell_edges(), d1, (dof2.total, dof1.total)
    )


def _check_same_mesh(mesh, *dofmaps):
    for dm in dofmaps:
        if dm.mesh is not mesh:
            raise ValueError("dof maps were built on a different mesh")


# ----------------------------------------------------------------------
# field evaluation
# ----------------------------------------------------------------------


def eval_form0_on_cells(mesh, coeffs_full, ref_points, cells=None):
    """Represented 0-form at reference points of each cell: (n_sel, m)."""
    tab = mesh.cell_nodes() if cells is None else mesh.cell_nodes()[cells]
    basis = elements.eval_basis_node(ref_points, mesh.spacings)
    return np.einsum("cl,ml->cm", coeffs_full[tab], basis)


def eval_form0_grad_on_cells(mesh, coeffs_full, ref_points, cells=None):
    """Spatial gradient of a 0-form at reference points: (n_sel, m, 3)."""
    tab = mesh.cell_nodes() if cells is None else mesh.cell_nodes()[cells]
    basis = elements.eval_basis_node_grad(ref_points, mesh.spacings)
    return np.einsum("cl,mlk->cmk", coeffs_full[tab], basis)


def eval_form1_on_cells(mesh, coeffs_full, ref_points, cells=None):
    """Represented 1-form at reference points of each cell: (n_sel, m, 4)."""
    tab = mesh.cell_edges() if cells is None else mesh.cell_edges()[cells]
    basis = elements.eval_basis_edge(ref_points, mesh.spacings)
    return np.einsum("cl,mlk->cmk", coeffs_full[tab], basis)


def locate_cells(mesh, points):
    """Cell ids and cell-centered reference coordinates of global points."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    d = np.asarray(mesh.spacings)
    n = np.asarray(mesh.divisions)
    idx = np.floor(pts / d).astype(np.int64)
    if mesh.time_periodic:
        idx[:, 0] %= n[0]
    idx = np.clip(idx, 0, n - 1)
    ref = pts - (idx + 0.5) * d
    cell_ids = np.ravel_multi_index(idx.T, mesh.divisions)
    return cell_ids, ref


def eval_form1_at_points(mesh, coeffs_full, points):
    """Represented 1-form at arbitrary points of Q: (m, 4)."""
    cell_ids, ref = locate_cells(mesh, points)
    local = coeffs_full[mesh.cell_edges()[cell_ids]]  # (m, 32)
    basis = elements.eval_basis_edge(ref, mesh.spacings)  # (m, 32, 4)
    return np.einsum("ml,mlk->mk", local, basis)


def eval_form0_at_points(mesh, coeffs_full, points):
    """Represented 0-form at arbitrary points of Q: (m,)."""
    cell_ids, ref = locate_cells(mesh, points)
    local = coeffs_full[mesh.cell_nodes()[cell_ids]]  # (m, 16)
    basis = elements.eval_basis_node(ref, mesh.spacings)  # (m, 16)
    return np.einsum("ml,ml->m", local, basis)


def cell_averages(mesh, coeffs_full, q=2, cells=None):
    """Per-4-cell mean of the represented scalar and vector parts.

    Returns (phi_avg, A_avg) of shapes (n_sel,) and (n_sel, 3); the mean is
    the Gauss-weighted integral average over each cell.
    """
    rule = elements.gauss_rule(mesh.spacings, q)
    vol = float(np.prod(mesh.spacings))
    vals = eval_form1_on_cells(mesh, coeffs_full, rule.points, cells=cells)
    avg = np.einsum("cmk,m->ck", vals, rule.weights) / vol
    return avg[:, 0], avg[:, 1:]


# ----------------------------------------------------------------------
# harmonic-space diagnostics
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class HarmonicReport:
    dim_h1: int
    min_singular_saddle: float
    n_free_u: int
    n_free_sigma: int


def harmonic_diagnostics(system, max_dofs=2000):
    """Dense diagnostics of the reduced saddle system.

    Reports the dimension of the discrete harmonic space
    {v : K v = 0, B v = 0} over the free 1-form DOFs, and the smallest
    singular value of the assembled saddle matrix. Refuses meshes with more
    than `max_dofs` total 1-form DOFs.
    """
    if system.dof1.total > max_dofs:
        raise ValueError(
            f"harmonic diagnostics limited to {max_dofs} 1-form DOFs, "
            f"got {system.dof1.total}"
        )
    A = system.A.toarray()
    B = system.B.toarray()
    blocks = []
    for M in (A, B):
        scale = np.linalg.norm(M) or 1.0
        blocks.append(M / scale)
    stacked = np.vstack(blocks)
    sv = np.linalg.svd(stacked, compute_uv=False)
    smax = sv[0] if sv.size else 0.0
    dim_h1 = int(np.sum(sv <= 1e-8 * smax)) if sv.size else A.shape[1]

    kkt = np.block(
        [[A, B.T], [B, np.zeros((B.shape[0], B.shape[0]))]]
    )
    sv_kkt = np.linalg.svd(kkt, compute_uv=False)
    min_sv = float(sv_kkt[-1]) if sv_kkt.size else 0.0
    return HarmonicReport(
        dim_h1=dim_h1,
        min_singular_saddle=min_sv,
        n_free_u=system.dof1.n_free,
        n_free_sigma=system.dof0.n_free,
    )

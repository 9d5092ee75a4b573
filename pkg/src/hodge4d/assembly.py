"""Global system assembly: stiffness, constraint, masses, loads, BC reduction.

The discrete problem couples a 1-form unknown u (scalar part on time edges,
vector part on spatial edges) with a 0-form multiplier enforcing the weak
divergence constraint. The assembled blocks are

    A[i, j] = <D1 e_j, D1 e_i>      (stiffness, symmetric PSD)
    B[k, j] = <D0 p_k, e_j>         (constraint, the mass-weighted pairing)

over the full DOF numbering; `reduce_with_bc` eliminates constrained DOFs
and folds lifting values into the right-hand sides.

Assembly is cell-chunked and deterministic; assembled objects are immutable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import dofs, elements
from .mesh import Mesh4


@dataclass(frozen=True)
class SaddleSystem:
    """Reduced saddle-point system over free DOFs.

    A        : (n_u, n_u) stiffness, symmetric positive semidefinite
    B        : (n_sigma, n_u) constraint
    rhs_u    : load minus stiffness-lifting contribution
    rhs_sigma: constraint right side induced by lifting (zero if homogeneous)
    M0, M1   : reduced mass matrices (norms, reference mixed solve)
    """

    A: sp.csr_matrix
    B: sp.csr_matrix
    rhs_u: np.ndarray
    rhs_sigma: np.ndarray
    M0: sp.csr_matrix
    M1: sp.csr_matrix
    dof0: dofs.DofMap
    dof1: dofs.DofMap
    mesh: Mesh4


def assemble_stiffness(mesh, dof1):
    """Global stiffness of the derivative pairing on 1-forms (full numbering).

    The scalar block (time edges) and vector block (spatial edges) do not
    couple: the derivative separates the gradient of the scalar part from
    the rot of the vector part.
    """
    loc = elements.local_matrices(mesh.spacings)
    edges = mesh.cell_edges()
    return dofs.scatter_sum(edges, edges, loc.k, (dof1.total, dof1.total))


def assemble_constraint(mesh, dof0, dof1):
    """Global constraint pairing B[k, j] = <D0 p_k, e_j> (full numbering).

    Columns of time-edge DOFs vanish: nodal gradients have no dt component.
    """
    loc = elements.local_matrices(mesh.spacings)
    return dofs.scatter_sum(
        mesh.cell_nodes(), mesh.cell_edges(), loc.c, (dof0.total, dof1.total)
    )


def assemble_mass(mesh, dofmap):
    """Global mass matrix of 0- or 1-forms (full numbering)."""
    loc = elements.local_matrices(mesh.spacings)
    if dofmap.degree == 0:
        tab, m = mesh.cell_nodes(), loc.m0
    elif dofmap.degree == 1:
        tab, m = mesh.cell_edges(), loc.m1
    else:
        raise ValueError(f"no mass assembly for degree {dofmap.degree}")
    return dofs.scatter_sum(tab, tab, m, (dofmap.total, dofmap.total))


def assemble_load(mesh, dof1, source, quadrature=4, chunk=2048):
    """Load vector <F, e_i> over the full 1-form numbering.

    `source` is a vectorized callable mapping points (m, 4) in (t,x,y,z)
    order to 1-form component values (m, 4) ordered (dt, dx, dy, dz); entry
    i is the cell-wise Gauss integral of the component-wise product with
    basis function i.
    """
    if quadrature < 1:
        raise ValueError(f"quadrature order must be >= 1, got {quadrature}")
    rule = elements.gauss_rule(mesh.spacings, quadrature)
    basis_w = elements.eval_basis_edge(rule.points, mesh.spacings)
    basis_w = basis_w * rule.weights[:, None, None]  # (nq, 32, 4)

    centers = mesh.cell_origins() + 0.5 * np.asarray(mesh.spacings)
    edges = mesh.cell_edges()
    load = np.zeros(dof1.total)
    n_cells = mesh.n_cells
    for start in range(0, n_cells, chunk):
        c = centers[start : start + chunk]
        pts = c[:, None, :] + rule.points[None, :, :]  # (m_c, nq, 4)
        f = np.asarray(source(pts.reshape(-1, 4)), dtype=float)
        f = f.reshape(c.shape[0], -1, 4)
        local = np.einsum("cqk,qlk->cl", f, basis_w)
        np.add.at(load, edges[start : start + chunk], local)
    return load


def reduce_with_bc(mesh, dof0, dof1, A_full, B_full, M0_full, M1_full, load_full):
    """Reduce full matrices/vectors to free DOFs, folding in lifting values.

    rhs_u picks up -A[free, constrained] @ lifting, rhs_sigma picks up
    -B[free, constrained] @ lifting; with all-zero lifting this reproduces
    plain row/column deletion.
    """
    if not np.all(np.isfinite(dof1.lifting)):
        raise ValueError("1-form lifting contains non-finite values")
    f1 = dof1.free_ids
    f0 = dof0.free_ids
    c1 = np.flatnonzero(dof1.constrained)

    A = A_full[f1][:, f1].tocsr()
    B = B_full[f0][:, f1].tocsr()
    rhs_u = load_full[f1]
    rhs_sigma = np.zeros(f0.size)
    if c1.size:
        lift = dof1.lifting[c1]
        rhs_u = rhs_u - A_full[f1][:, c1] @ lift
        rhs_sigma = -(B_full[f0][:, c1] @ lift)
    M0 = M0_full[f0][:, f0].tocsr()
    M1 = M1_full[f1][:, f1].tocsr()
    return SaddleSystem(
        A=A, B=B, rhs_u=rhs_u, rhs_sigma=rhs_sigma,
        M0=M0, M1=M1, dof0=dof0, dof1=dof1, mesh=mesh,
    )


def build_system(mesh, source, quadrature=4, lifting=None):
    """Assemble the reduced saddle system of a scenario in one call."""
    dof0 = dofs.build_dofmap(mesh, 0)
    dof1 = dofs.build_dofmap(mesh, 1, lifting=lifting)
    A_full = assemble_stiffness(mesh, dof1)
    B_full = assemble_constraint(mesh, dof0, dof1)
    M0_full = assemble_mass(mesh, dof0)
    M1_full = assemble_mass(mesh, dof1)
    load = assemble_load(mesh, dof1, source, quadrature=quadrature)
    return reduce_with_bc(mesh, dof0, dof1, A_full, B_full, M0_full, M1_full, load)

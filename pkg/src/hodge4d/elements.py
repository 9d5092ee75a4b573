"""Reference-cell bases and local matrices for the lowest-order cubical family.

The reference cell is the centered box

    [-dt/2, dt/2] x [-dx/2, dx/2] x [-dy/2, dy/2] x [-dz/2, dz/2]

with point coordinates ordered (t, x, y, z). Three bases live here:

* 16 nodal functions for 0-forms: multilinear in all four coordinates,
  Kronecker-valued at the 16 cell corners. Corner/function index bits are
  (x, y, z, t), x fastest.
* 32 edge functions for 1-forms, one per cell edge, with a single nonzero
  component each. Functions 0..7 carry the dt component (one per spatial
  corner, constant in t); 8..15 / 16..23 / 24..31 carry dx / dy / dz and
  are constant along their own axis. Each is 1 on its own edge midline.
  Transverse index bits: x-edges (y,z,t); y-edges (z,x,t); z-edges (x,y,t).
* 24 face functions for 2-forms (4 per component class), each 1 at its own
  face center. Used only for derivative-exactness checks.

1-form values are arrays with last axis (dt, dx, dy, dz). 2-form values use
the component order (dt^dx, dt^dy, dt^dz, dy^dz, dz^dx, dx^dy).

The differential acting on these fields takes spatial derivatives only:
applied to a 1-form (phi, A) it yields dt^(grad phi) + rot A, so columns of
the local derivative matrices carry exact +-1/spacing entries and the
composition of the two local derivatives vanishes identically in floating
point.

All evaluators are pure functions of immutable inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

FORM1_COMPONENTS = ("dt", "dx", "dy", "dz")
FORM2_COMPONENTS = ("dt^dx", "dt^dy", "dt^dz", "dy^dz", "dz^dx", "dx^dy")

# (component axis, transverse axes) per edge block; axes index (t,x,y,z)=(0,1,2,3)
_EDGE_BLOCKS = (
    (0, (1, 2, 3)),  # dt component, factors over (x, y, z)
    (1, (2, 3, 0)),  # dx component, factors over (y, z, t)
    (2, (3, 1, 0)),  # dy component, factors over (z, x, t)
    (3, (1, 2, 0)),  # dz component, factors over (x, y, t)
)

# transverse axis pair per 2-form component class, in (t,x,y,z) order
_FACE_TRANSVERSE = ((2, 3), (1, 3), (1, 2), (0, 1), (0, 2), (0, 3))


def _lam(pts, spacings):
    """Per-axis linear factors: lam[a][:, s] = (1 + (2s-1)*2*xi_a/d_a)/2."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    out = []
    for a in range(4):
        r = 2.0 * pts[:, a] / spacings[a]
        out.append(np.stack([0.5 * (1.0 - r), 0.5 * (1.0 + r)], axis=-1))
    return pts, out


def _dlam(spacings):
    """Derivatives of the linear factors: dlam[a][s] = (2s-1)/d_a."""
    return [np.array([-1.0, 1.0]) / spacings[a] for a in range(4)]


_NODE_BITS = np.array(
    [[j & 1, (j >> 1) & 1, (j >> 2) & 1, (j >> 3) & 1] for j in range(16)]
)  # columns (bx, by, bz, bt)

_EDGE_BITS = np.array(
    [[l & 1, (l >> 1) & 1, (l >> 2) & 1] for l in range(8)]
)


def eval_basis_node(points, spacings):
    """Values of the 16 nodal functions at reference points: (m, 16)."""
    pts, lam = _lam(points, spacings)
    b = _NODE_BITS
    return (
        lam[1][:, b[:, 0]] * lam[2][:, b[:, 1]] * lam[3][:, b[:, 2]] * lam[0][:, b[:, 3]]
    )


def eval_basis_node_grad(points, spacings):
    """Spatial gradients of the nodal functions: (m, 16, 3), axes (x, y, z)."""
    pts, lam = _lam(points, spacings)
    dlam = _dlam(spacings)
    b = _NODE_BITS
    fx = lam[1][:, b[:, 0]]
    fy = lam[2][:, b[:, 1]]
    fz = lam[3][:, b[:, 2]]
    ft = lam[0][:, b[:, 3]]
    gx = dlam[1][b[:, 0]][None, :] * fy * fz * ft
    gy = fx * dlam[2][b[:, 1]][None, :] * fz * ft
    gz = fx * fy * dlam[3][b[:, 2]][None, :] * ft
    return np.stack([gx, gy, gz], axis=-1)


def eval_basis_edge(points, spacings):
    """Values of the 32 edge functions at reference points: (m, 32, 4)."""
    pts, lam = _lam(points, spacings)
    m = pts.shape[0]
    out = np.zeros((m, 32, 4))
    b = _EDGE_BITS
    for block, (comp, axes) in enumerate(_EDGE_BLOCKS):
        val = (
            lam[axes[0]][:, b[:, 0]]
            * lam[axes[1]][:, b[:, 1]]
            * lam[axes[2]][:, b[:, 2]]
        )
        out[:, 8 * block : 8 * (block + 1), comp] = val
    return out


def eval_basis_edge_d1(points, spacings):
    """Derivative 2-forms of the 32 edge functions: (m, 32, 6).

    Row l holds dt^(grad of the dt part) + rot(spatial part) of edge
    function l, in the component order of FORM2_COMPONENTS.
    """
    pts, lam = _lam(points, spacings)
    dlam = _dlam(spacings)
    m = pts.shape[0]
    out = np.zeros((m, 32, 6))
    b = _EDGE_BITS

    # time-directed block: dt^dx, dt^dy, dt^dz from the spatial gradient
    fx, fy, fz = lam[1][:, b[:, 0]], lam[2][:, b[:, 1]], lam[3][:, b[:, 2]]
    out[:, 0:8, 0] = dlam[1][b[:, 0]][None, :] * fy * fz
    out[:, 0:8, 1] = fx * dlam[2][b[:, 1]][None, :] * fz
    out[:, 0:8, 2] = fx * fy * dlam[3][b[:, 2]][None, :]

    # x-directed block, factors (y, z, t): contributes to dz^dx and dx^dy
    fy, fz, ft = lam[2][:, b[:, 0]], lam[3][:, b[:, 1]], lam[0][:, b[:, 2]]
    out[:, 8:16, 4] = fy * dlam[3][b[:, 1]][None, :] * ft  # +d(u_x)/dz
    out[:, 8:16, 5] = -dlam[2][b[:, 0]][None, :] * fz * ft  # -d(u_x)/dy

    # y-directed block, factors (z, x, t): contributes to dx^dy and dy^dz
    fz, fx, ft = lam[3][:, b[:, 0]], lam[1][:, b[:, 1]], lam[0][:, b[:, 2]]
    out[:, 16:24, 5] = fz * dlam[1][b[:, 1]][None, :] * ft  # +d(u_y)/dx
    out[:, 16:24, 3] = -dlam[3][b[:, 0]][None, :] * fx * ft  # -d(u_y)/dz

    # z-directed block, factors (x, y, t): contributes to dy^dz and dz^dx
    fx, fy, ft = lam[1][:, b[:, 0]], lam[2][:, b[:, 1]], lam[0][:, b[:, 2]]
    out[:, 24:32, 3] = fx * dlam[2][b[:, 1]][None, :] * ft  # +d(u_z)/dy
    out[:, 24:32, 4] = -dlam[1][b[:, 0]][None, :] * fy * ft  # -d(u_z)/dx
    return out


def eval_basis_face(points, spacings):
    """Values of the 24 face functions at reference points: (m, 24, 6)."""
    pts, lam = _lam(points, spacings)
    m = pts.shape[0]
    out = np.zeros((m, 24, 6))
    for comp, (a1, a2) in enumerate(_FACE_TRANSVERSE):
        for k in range(4):
            b0, b1 = k & 1, (k >> 1) & 1
            out[:, 4 * comp + k, comp] = lam[a1][:, b0] * lam[a2][:, b1]
    return out


def apply_D1_ref(coefficients, points, spacings):
    """Derivative 2-form of a local 1-form with the given 32 coefficients.

    Returns (m, 6) component values at the reference points; there is no
    time-derivative contribution by construction.
    """
    coefficients = np.asarray(coefficients, dtype=float)
    d1 = eval_basis_edge_d1(points, spacings)
    return np.einsum("l,mlc->mc", coefficients, d1)


def edge_midlines(spacings):
    """Reference midline centers of the 32 edges, ordered like the basis: (32, 4)."""
    half = np.asarray(spacings) / 2.0
    pts = np.zeros((32, 4))
    b = _EDGE_BITS
    for block, (comp, axes) in enumerate(_EDGE_BLOCKS):
        rows = slice(8 * block, 8 * (block + 1))
        for k, a in enumerate(axes):
            pts[rows, a] = (2 * b[:, k] - 1) * half[a]
    return pts


def face_centers(spacings):
    """Reference centers of the 24 faces, ordered like the face basis: (24, 4)."""
    half = np.asarray(spacings) / 2.0
    pts = np.zeros((24, 4))
    for comp, (a1, a2) in enumerate(_FACE_TRANSVERSE):
        for k in range(4):
            b0, b1 = k & 1, (k >> 1) & 1
            pts[4 * comp + k, a1] = (2 * b0 - 1) * half[a1]
            pts[4 * comp + k, a2] = (2 * b1 - 1) * half[a2]
    return pts


def node_corners(spacings):
    """Reference coordinates of the 16 corners, ordered like the nodal basis."""
    half = np.asarray(spacings) / 2.0
    b = _NODE_BITS
    signs = 2 * b - 1
    return np.stack(
        [
            signs[:, 3] * half[0],
            signs[:, 0] * half[1],
            signs[:, 1] * half[2],
            signs[:, 2] * half[3],
        ],
        axis=-1,
    )


@dataclass(frozen=True)
class QuadratureRule:
    """Tensor-product Gauss rule on the reference cell.

    q points per axis integrate per-axis polynomials of degree <= 2q-1
    exactly; the weights sum to the cell 4-volume.
    """

    q: int
    points: np.ndarray  # (q**4, 4)
    weights: np.ndarray  # (q**4,)


def gauss_rule(spacings, q):
    """Build the tensor-product Gauss rule with q points per axis."""
    if q < 1:
        raise ValueError(f"quadrature order must be >= 1, got {q}")
    x1, w1 = np.polynomial.legendre.leggauss(q)
    pts_1d = [0.5 * spacings[a] * x1 for a in range(4)]
    wts_1d = [0.5 * spacings[a] * w1 for a in range(4)]
    grids = np.meshgrid(*pts_1d, indexing="ij")
    points = np.stack([g.ravel() for g in grids], axis=-1)
    wg = np.meshgrid(*wts_1d, indexing="ij")
    weights = wg[0].ravel() * wg[1].ravel() * wg[2].ravel() * wg[3].ravel()
    return QuadratureRule(q=q, points=points, weights=weights)


@dataclass(frozen=True)
class LocalMatrices:
    """Per-cell matrices on the reference cell.

    m0   : (16, 16) 0-form mass
    m1   : (32, 32) 1-form mass (componentwise L2 product)
    k    : (32, 32) stiffness of the derivative pairing
    c    : (16, 32) constraint pairing of nodal gradients against 1-forms
    d0   : (32, 16) coefficients of nodal gradients in the edge basis
    d1   : (24, 32) coefficients of edge derivatives in the face basis
    """

    m0: np.ndarray
    m1: np.ndarray
    k: np.ndarray
    c: np.ndarray
    d0: np.ndarray
    d1: np.ndarray


def local_matrices(spacings, q=2):
    """Assemble all local matrices by tensor Gauss quadrature.

    With q=2 every entry is exact: the integrands are per-axis polynomials
    of degree <= 2. The local derivative matrices are computed from exact
    midline/center evaluations, so d1 @ d0 is the exact zero matrix.
    """
    if q < 1:
        raise ValueError(f"quadrature order must be >= 1, got {q}")
    spacings = tuple(float(d) for d in spacings)
    if any(not (d > 0.0) for d in spacings):
        raise ValueError(f"spacings must be > 0, got {spacings}")
    rule = gauss_rule(spacings, q)
    w = rule.weights

    n = eval_basis_node(rule.points, spacings)
    g = eval_basis_node_grad(rule.points, spacings)
    e = eval_basis_edge(rule.points, spacings)
    d1e = eval_basis_edge_d1(rule.points, spacings)

    m0 = np.einsum("qi,q,qj->ij", n, w, n)
    m1 = np.einsum("qic,q,qjc->ij", e, w, e)
    k = np.einsum("qic,q,qjc->ij", d1e, w, d1e)
    c = np.einsum("qic,q,qjc->ij", g, w, e[:, :, 1:])

    d0 = local_d0(spacings)
    d1 = local_d1(spacings)
    return LocalMatrices(m0=m0, m1=m1, k=k, c=c, d0=d0, d1=d1)


def local_d0(spacings):
    """Edge-basis coefficients of the 16 nodal gradients: (32, 16).

    Equals the tangential component of each gradient at the edge midlines;
    rows of time-directed edges vanish (the derivative has no dt part).
    """
    mid = edge_midlines(spacings)
    grad = eval_basis_node_grad(mid, spacings)  # (32, 16, 3)
    d0 = np.zeros((32, 16))
    for block, (comp, _) in enumerate(_EDGE_BLOCKS):
        if comp == 0:
            continue
        rows = slice(8 * block, 8 * (block + 1))
        d0[rows, :] = grad[rows, :, comp - 1]
    return d0


def local_d1(spacings):
    """Face-basis coefficients of the 32 edge derivatives: (24, 32)."""
    centers = face_centers(spacings)
    d1e = eval_basis_edge_d1(centers, spacings)  # (24, 32, 6)
    d1 = np.zeros((24, 32))
    for comp in range(6):
        rows = slice(4 * comp, 4 * (comp + 1))
        d1[rows, :] = d1e[rows, :, comp]
    return d1

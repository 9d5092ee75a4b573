"""The two built-in experiments and their error/rate bookkeeping.

Example 1 is a manufactured periodic solution on the unit 4-cube: the
scalar part sin(pi x) sin(pi y) sin(pi z) cos(2 pi t) and a divergence-free
vector part (cos sin sin, sin cos sin, -2 sin sin cos) sin(2 pi t), driven
by the matching source (3 pi^2 / 6 pi^2 amplitudes). The scalar source
amplitude is +3 pi^2 so that the scalar Poisson equation holds for the
stated solution.

Example 2 is a plasma-source demonstration: an azimuthal unit current loop
in an annulus at height z = 2/3, a grounded metal box, and a sinusoidally
driven electrode patch on the bottom face.

Errors are measured in the componentwise L2 norm over the space-time box,
evaluated cell-wise with a tensor Gauss rule. The 1-point rule samples cell
centers, which is the convention that reproduces the reference error table
(the center of a cell is a supercloseness point of the lowest-order
elements; higher-order rules expose the first-order best-approximation
floor of the constant-in-axis component instead).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import assembly, dofs, elements, solvers
from .mesh import build_mesh

PI = math.pi


def example1_source(points):
    """Source 1-form of the manufactured problem at points (m, 4)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    t, x, y, z = pts[:, 0], pts[:, 1], pts[:, 2], pts[:, 3]
    sx, cx = np.sin(PI * x), np.cos(PI * x)
    sy, cy = np.sin(PI * y), np.cos(PI * y)
    sz, cz = np.sin(PI * z), np.cos(PI * z)
    st, ct = np.sin(2 * PI * t), np.cos(2 * PI * t)
    out = np.empty_like(pts)
    out[:, 0] = 3 * PI**2 * sx * sy * sz * ct
    out[:, 1] = 3 * PI**2 * cx * sy * sz * st
    out[:, 2] = 3 * PI**2 * sx * cy * sz * st
    out[:, 3] = -6 * PI**2 * sx * sy * cz * st
    return out


def example1_exact(points):
    """Exact solution 1-form of the manufactured problem at points (m, 4)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    t, x, y, z = pts[:, 0], pts[:, 1], pts[:, 2], pts[:, 3]
    sx, cx = np.sin(PI * x), np.cos(PI * x)
    sy, cy = np.sin(PI * y), np.cos(PI * y)
    sz, cz = np.sin(PI * z), np.cos(PI * z)
    st, ct = np.sin(2 * PI * t), np.cos(2 * PI * t)
    out = np.empty_like(pts)
    out[:, 0] = sx * sy * sz * ct
    out[:, 1] = cx * sy * sz * st
    out[:, 2] = sx * cy * sz * st
    out[:, 3] = -2 * sx * sy * cz * st
    return out


def error_norm(mesh, u_full, exact, quadrature=1, chunk=2048):
    """Componentwise L2 error of a represented 1-form against an exact field.

    `u_full` is the full coefficient vector (lifting re-attached); `exact`
    maps points (m, 4) to component values (m, 4). The integral is the
    cell-wise tensor Gauss rule of the given order; quadrature=1 samples
    cell centers (see module docstring).
    """
    rule = elements.gauss_rule(mesh.spacings, quadrature)
    centers = mesh.cell_origins() + 0.5 * np.asarray(mesh.spacings)
    total = 0.0
    n_cells = mesh.n_cells
    for start in range(0, n_cells, chunk):
        cells = np.arange(start, min(start + chunk, n_cells))
        uh = dofs.eval_form1_on_cells(mesh, u_full, rule.points, cells=cells)
        pts = centers[cells][:, None, :] + rule.points[None, :, :]
        ue = np.asarray(exact(pts.reshape(-1, 4))).reshape(uh.shape)
        diff2 = np.sum((uh - ue) ** 2, axis=-1)
        total += float(np.einsum("cm,m->", diff2, rule.weights))
    return math.sqrt(total)


@dataclass(frozen=True)
class ConvergenceRecord:
    """One refinement level: cell count, mesh size, error, rate vs previous."""

    N: int
    h: float
    error: float
    rate: float | None = None


def convergence_rate(prev, cur):
    """log(E_prev/E_cur) / log(h_prev/h_cur) for two successive records."""
    return math.log(prev.error / cur.error) / math.log(prev.h / cur.h)


def convergence_study(
    levels,
    scenario="example1",
    solver="krylov",
    tol=1e-8,
    load_quadrature=4,
    error_quadrature=1,
    extents=(1.0, 1.0, 1.0, 1.0),
    time_periodic=False,
):
    """Run the manufactured-solution study over uniform n^4 meshes.

    `levels` is an increasing list of per-axis division counts; each level
    solves the scenario and records (N, h, E_h, r_h). Solver failures
    propagate.
    """
    if scenario != "example1":
        raise ValueError("the convergence study is defined for example1")
    records = []
    for n in levels:
        mesh = build_mesh((n, n, n, n), extents, time_periodic=time_periodic)
        system = assembly.build_system(
            mesh, example1_source, quadrature=load_quadrature
        )
        result = solvers.solve(system, method=solver, tol=tol)
        if not result.converged:
            raise solvers.DivergedError(
                f"solver did not converge at level {n}", result.iterations
            )
        u_full = system.dof1.expand(result.u.values)
        err = error_norm(mesh, u_full, example1_exact, quadrature=error_quadrature)
        rate = None
        if records:
            prev = records[-1]
            rate = convergence_rate(prev, ConvergenceRecord(n**4, mesh.h, err))
        records.append(ConvergenceRecord(N=mesh.n_cells, h=mesh.h, error=err, rate=rate))
    return records


# ----------------------------------------------------------------------
# Example 2: current loop + driven electrode in a grounded box
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class Example2Config:
    """Geometry and drive of the plasma-source demonstration.

    The coil is an annulus (inner/outer radius around the domain center)
    in one horizontal layer near `coil_z`; `coil_thickness` None means the
    single cell layer containing `coil_z`. The electrode is an (x, y) box
    on the bottom face z=0, driven by `voltage_amplitude * sin(2 pi t/T)`;
    the current loop carries `current_amplitude * sin(2 pi t/T)` in the
    azimuthal direction.
    """

    inner_radius: float = 0.3
    outer_radius: float = 0.4
    coil_z: float = 2.0 / 3.0
    coil_thickness: float | None = None
    current_amplitude: float = 1.0
    electrode_x: tuple = (0.25, 0.75)
    electrode_y: tuple = (0.25, 0.75)
    voltage_amplitude: float = 100.0


@dataclass(frozen=True)
class Example2Setup:
    """Resolved scenario pieces: vectorized source, lifting, regions."""

    source: object
    lifting: object
    coil_z_bounds: tuple
    electrode_box: tuple  # 4-axis box usable as a mesh region


def example2_setup(config, mesh):
    """Resolve an Example2Config against a mesh.

    Returns the vectorized source field (azimuthal current in the coil
    annulus, no charge), and the lifting callable prescribing the electrode
    waveform on time-edge DOFs (sampled at slab midpoints) and zero
    elsewhere on the lateral boundary.
    """
    T, Lx, Ly, Lz = mesh.extents
    cx, cy = 0.5 * Lx, 0.5 * Ly
    cfg = config
    if not (0 < cfg.inner_radius < cfg.outer_radius):
        raise ValueError("coil radii must satisfy 0 < inner < outer")
    if cfg.outer_radius > 0.5 * min(Lx, Ly):
        raise ValueError("coil annulus extends outside the domain")
    if not (0 < cfg.coil_z < Lz):
        raise ValueError("coil layer lies outside the domain")
    ex, ey = cfg.electrode_x, cfg.electrode_y
    if not (0 <= ex[0] < ex[1] <= Lx and 0 <= ey[0] < ey[1] <= Ly):
        raise ValueError("electrode region lies outside the bottom face")

    if cfg.coil_thickness is None:
        dz = mesh.spacings[3]
        iz = min(int(cfg.coil_z / dz), mesh.divisions[3] - 1)
        z_bounds = (iz * dz, (iz + 1) * dz)
    else:
        z_bounds = (
            cfg.coil_z - 0.5 * cfg.coil_thickness,
            cfg.coil_z + 0.5 * cfg.coil_thickness,
        )

    def source(points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        t, x, y, z = pts[:, 0], pts[:, 1], pts[:, 2], pts[:, 3]
        rx, ry = x - cx, y - cy
        r = np.hypot(rx, ry)
        inside = (
            (r >= cfg.inner_radius)
            & (r <= cfg.outer_radius)
            & (z >= z_bounds[0])
            & (z <= z_bounds[1])
        )
        out = np.zeros_like(pts)
        amp = np.where(inside, cfg.current_amplitude * np.sin(2 * PI * t / T), 0.0)
        r_safe = np.where(r > 0, r, 1.0)
        out[:, 1] = amp * (-ry / r_safe)
        out[:, 2] = amp * (rx / r_safe)
        return out

    def lifting(points, kind):
        vals = np.zeros(points.shape[0])
        if kind == ("t",):
            t, x, y, z = points[:, 0], points[:, 1], points[:, 2], points[:, 3]
            on_electrode = (
                (np.abs(z) <= 1e-12 * Lz)
                & (x >= ex[0] - 1e-12 * Lx)
                & (x <= ex[1] + 1e-12 * Lx)
                & (y >= ey[0] - 1e-12 * Ly)
                & (y <= ey[1] + 1e-12 * Ly)
            )
            vals = np.where(
                on_electrode, cfg.voltage_amplitude * np.sin(2 * PI * t / T), 0.0
            )
        return vals

    electrode_box = ((0.0, T), ex, ey, (0.0, 0.0))
    return Example2Setup(
        source=source,
        lifting=lifting,
        coil_z_bounds=z_bounds,
        electrode_box=electrode_box,
    )

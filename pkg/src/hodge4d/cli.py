"""Command-line entry points and file serialization.

Subcommands: ``convergence`` (manufactured-solution study to CSV),
``solve`` (single scenario solve, optional VTK slice + JSON report),
``check-complex`` (derivative-composition and harmonic diagnostics) and
``mesh-info`` (entity counts). Exit codes: 0 success, 2 configuration
error, 3 solver non-convergence. Diagnostics go to stderr, data to files.

Configuration is a flat ``section.key=value`` text file (see RunConfig);
command-line flags override file values. The environment variable
HODGE4D_OUT overrides the output directory.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import assembly, dofs, scenarios, solvers
from .mesh import build_mesh
from .scenarios import ConvergenceRecord

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NOCONV = 3

_AXIS_OF = {"x": 1, "y": 2, "z": 3}


@dataclass
class SliceSpec:
    """A 2D cell-layer slice: one fixed spatial axis and one time slab."""

    axis: str
    coordinate: float
    time: float

    @classmethod
    def parse(cls, text):
        axis, coord, t = None, None, 0.0
        for part in text.split(","):
            key, _, val = part.partition("=")
            key = key.strip()
            if key == "t":
                t = float(val)
            elif key in _AXIS_OF:
                axis, coord = key, float(val)
            else:
                raise ValueError(f"bad slice component {part!r}")
        if axis is None:
            raise ValueError(f"slice {text!r} fixes no spatial axis")
        return cls(axis=axis, coordinate=coord, time=t)


@dataclass
class RunConfig:
    """Validated run parameters (mesh, scenario, solver, quadrature, output)."""

    divisions: tuple = (4, 4, 4, 4)
    extents: tuple = (1.0, 1.0, 1.0, 1.0)
    time_periodic: bool = False
    scenario: str = "example1"
    source_constant: tuple | None = None  # for scenario=custom
    example2: scenarios.Example2Config = field(default_factory=scenarios.Example2Config)
    solver: str = "krylov"
    tol: float = 1e-8
    max_iter: int | None = None
    delta: float | None = None
    omega: float | None = None
    augment: str | float | None = None  # "auto", a weight, or None
    load_quadrature: int = 4
    error_quadrature: int = 1
    levels: tuple = ()
    out: str = ""
    out_dir: str = "."
    slice: SliceSpec | None = None

    def validate(self):
        if len(self.divisions) != 4 or any(n < 1 for n in self.divisions):
            raise ValueError(f"bad divisions {self.divisions}")
        if len(self.extents) != 4 or any(not (e > 0) for e in self.extents):
            raise ValueError(f"bad extents {self.extents}")
        if self.scenario not in ("example1", "example2", "custom"):
            raise ValueError(f"unknown scenario {self.scenario!r}")
        if self.scenario == "custom":
            if self.source_constant is None or len(self.source_constant) != 4:
                raise ValueError(
                    "scenario=custom requires source.constant=ct,cx,cy,cz"
                )
        if self.solver not in ("aha", "krylov", "mixed"):
            raise ValueError(f"unknown solver {self.solver!r}")
        if not (self.tol > 0):
            raise ValueError("tol must be positive")
        if self.load_quadrature < 1 or self.error_quadrature < 1:
            raise ValueError("quadrature orders must be >= 1")
        return self


def _parse_bool(text):
    if text.lower() in ("1", "true", "yes", "on"):
        return True
    if text.lower() in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"bad boolean {text!r}")


def _parse_tuple(text, cast):
    return tuple(cast(p) for p in text.split(","))


def load_config(path):
    """Parse a flat section.key=value config file into a RunConfig."""
    cfg = RunConfig()
    ex2 = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, val = line.partition("=")
            if not sep:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {raw!r}")
            key, val = key.strip(), val.strip()
            try:
                _apply_config_key(cfg, ex2, key, val)
            except (ValueError, TypeError) as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from exc
    if ex2:
        cfg.example2 = scenarios.Example2Config(**ex2)
    return cfg


def _apply_config_key(cfg, ex2, key, val):
    if key == "mesh.divisions":
        cfg.divisions = _parse_tuple(val, int)
    elif key == "mesh.extents":
        cfg.extents = _parse_tuple(val, float)
    elif key == "mesh.time_periodic":
        cfg.time_periodic = _parse_bool(val)
    elif key == "scenario.kind":
        cfg.scenario = val
    elif key == "source.constant":
        cfg.source_constant = _parse_tuple(val, float)
    elif key in ("scenario.v0", "scenario.voltage_amplitude"):
        ex2["voltage_amplitude"] = float(val)
    elif key in ("scenario.j0", "scenario.current_amplitude"):
        ex2["current_amplitude"] = float(val)
    elif key == "scenario.inner_radius":
        ex2["inner_radius"] = float(val)
    elif key == "scenario.outer_radius":
        ex2["outer_radius"] = float(val)
    elif key == "scenario.coil_z":
        ex2["coil_z"] = float(val)
    elif key == "scenario.electrode_x":
        ex2["electrode_x"] = _parse_tuple(val, float)
    elif key == "scenario.electrode_y":
        ex2["electrode_y"] = _parse_tuple(val, float)
    elif key == "solver.kind":
        cfg.solver = val
    elif key == "solver.tol":
        cfg.tol = float(val)
    elif key == "solver.max_iter":
        cfg.max_iter = int(val)
    elif key == "solver.delta":
        cfg.delta = float(val)
    elif key == "solver.omega":
        cfg.omega = float(val)
    elif key == "solver.augment":
        cfg.augment = val if val == "auto" else float(val)
    elif key == "quadrature.load":
        cfg.load_quadrature = int(val)
    elif key == "quadrature.error":
        cfg.error_quadrature = int(val)
    elif key == "output.dir":
        cfg.out_dir = val
    elif key == "slice":
        cfg.slice = SliceSpec.parse(val)
    else:
        raise ValueError(f"unknown config key {key!r}")


# ----------------------------------------------------------------------
# serialization
# ----------------------------------------------------------------------


def write_csv(records, path):
    """Write convergence records as ``N,h,E,rate`` CSV in full precision.

    The rate field is empty on the first row. Records must be in refinement
    order (strictly decreasing h).
    """
    if not records:
        raise ValueError("no records to write")
    for prev, cur in zip(records, records[1:]):
        if not cur.h < prev.h:
            raise ValueError("records out of refinement order (h must decrease)")
    lines = ["N,h,E,rate"]
    for i, r in enumerate(records):
        rate = "" if r.rate is None else repr(float(r.rate))
        lines.append(f"{r.N},{repr(float(r.h))},{repr(float(r.error))},{rate}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_csv(path):
    """Inverse of write_csv (round-trips bitwise for finite doubles)."""
    records = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "N,h,E,rate":
            raise ValueError(f"unexpected CSV header {header!r}")
        for line in fh:
            if not line.strip():
                continue
            n, h, e, rate = line.strip().split(",")
            records.append(
                ConvergenceRecord(
                    N=int(n),
                    h=float(h),
                    error=float(e),
                    rate=None if rate == "" else float(rate),
                )
            )
    return records


def write_vtk_slice(mesh, u_full, slice_spec, path, quadrature=2):
    """Write one 2D cell-layer slice as legacy ASCII VTK structured points.

    Cell data carries the per-4-cell means of the represented scalar part
    (``phi_avg``) and vector part (``A_avg``, always three components) over
    the cells of the slab/layer selected by `slice_spec`.
    """
    axis = _AXIS_OF[slice_spec.axis]
    n = mesh.divisions
    d = mesh.spacings
    coord = slice_spec.coordinate
    if not (0.0 <= coord <= mesh.extents[axis]):
        raise ValueError(
            f"slice {slice_spec.axis}={coord} does not intersect the mesh"
        )
    t = slice_spec.time
    if mesh.time_periodic:
        t = t % mesh.extents[0]
    if not (0.0 <= t <= mesh.extents[0]):
        raise ValueError(f"slice time {slice_spec.time} outside [0, T]")
    layer = min(int(coord / d[axis]), n[axis] - 1)
    slab = min(int(t / d[0]), n[0] - 1)

    free_axes = [a for a in (1, 2, 3) if a != axis]
    a1, a2 = free_axes
    idx = [None] * 4
    idx[0], idx[axis] = slab, layer
    cells = np.empty((n[a1], n[a2]), dtype=np.int64)
    for i1 in range(n[a1]):
        for i2 in range(n[a2]):
            idx[a1], idx[a2] = i1, i2
            cells[i1, i2] = np.ravel_multi_index(tuple(idx), n)
    phi_avg, A_avg = dofs.cell_averages(mesh, u_full, q=quadrature, cells=cells.ravel())
    phi_avg = phi_avg.reshape(n[a1], n[a2])
    A_avg = A_avg.reshape(n[a1], n[a2], 3)

    axis_names = {1: "x", 2: "y", 3: "z"}
    lines = [
        "# vtk DataFile Version 3.0",
        f"phi/A cell averages, {slice_spec.axis}={coord:g} layer {layer}, "
        f"time slab {slab} ({axis_names[a1]},{axis_names[a2]}) plane",
        "ASCII",
        "DATASET STRUCTURED_POINTS",
        f"DIMENSIONS {n[a1] + 1} {n[a2] + 1} 1",
        "ORIGIN 0.0 0.0 0.0",
        f"SPACING {d[a1]!r} {d[a2]!r} 1.0",
        f"CELL_DATA {n[a1] * n[a2]}",
        "SCALARS phi_avg double 1",
        "LOOKUP_TABLE default",
    ]
    # VTK structured data runs fastest along the first declared dimension
    for i2 in range(n[a2]):
        for i1 in range(n[a1]):
            lines.append(repr(float(phi_avg[i1, i2])))
    lines.append("VECTORS A_avg double")
    for i2 in range(n[a2]):
        for i1 in range(n[a1]):
            v = A_avg[i1, i2]
            lines.append(f"{float(v[0])!r} {float(v[1])!r} {float(v[2])!r}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _fmt_compact_exp(value):
    """Format like 0.0e0 / 1.2e-15: one-digit mantissa, bare exponent."""
    if value == 0.0:
        return "0.0e0"
    exp = int(math.floor(math.log10(abs(value))))
    mant = value / 10.0**exp
    return f"{mant:.1f}e{exp}"


# ----------------------------------------------------------------------
# subcommands
# ----------------------------------------------------------------------


def _resolve_out_dir(cfg):
    out = os.environ.get("HODGE4D_OUT", cfg.out_dir)
    os.makedirs(out, exist_ok=True)
    return out


def _make_source_and_lifting(cfg, mesh):
    if cfg.scenario == "example1":
        return scenarios.example1_source, None
    if cfg.scenario == "example2":
        setup = scenarios.example2_setup(cfg.example2, mesh)
        return setup.source, setup.lifting
    const = np.asarray(cfg.source_constant, dtype=float)

    def source(points):
        pts = np.atleast_2d(points)
        return np.broadcast_to(const, (pts.shape[0], 4)).copy()

    return source, None


def cmd_convergence(cfg):
    records = scenarios.convergence_study(
        cfg.levels,
        scenario=cfg.scenario,
        solver=cfg.solver,
        tol=cfg.tol,
        load_quadrature=cfg.load_quadrature,
        error_quadrature=cfg.error_quadrature,
        extents=cfg.extents,
        time_periodic=cfg.time_periodic,
    )
    out = cfg.out or os.path.join(_resolve_out_dir(cfg), "convergence.csv")
    write_csv(records, out)
    for r in records:
        rate = "" if r.rate is None else f" rate={r.rate:.5f}"
        print(f"N={r.N} h={r.h:.6g} E={r.error:.6g}{rate}", file=sys.stderr)
    print(out)
    return EXIT_OK


def cmd_solve(cfg):
    mesh = build_mesh(
        cfg.divisions, cfg.extents, time_periodic=cfg.time_periodic
    )
    source, lifting = _make_source_and_lifting(cfg, mesh)
    system = assembly.build_system(
        mesh, source, quadrature=cfg.load_quadrature, lifting=lifting
    )
    print(
        f"assembled: {system.A.shape[0]} free 1-form DOFs, "
        f"{system.B.shape[0]} free multiplier DOFs",
        file=sys.stderr,
    )
    augment = cfg.augment
    if augment == "auto":
        augment = solvers.auto_augmentation(system)
    params = solvers.AhaParams(
        delta=cfg.delta,
        omega=cfg.omega,
        tol=cfg.tol,
        max_iter=cfg.max_iter,
        augment=augment or 0.0,
    )
    result = solvers.solve(system, method=cfg.solver, params=params, tol=cfg.tol)
    out_dir = _resolve_out_dir(cfg)
    outputs = []
    if result.converged:
        u_full = system.dof1.expand(result.u.values)
        if cfg.slice is not None:
            vtk_path = os.path.join(
                out_dir, f"slice_{cfg.slice.axis}{cfg.slice.coordinate:g}_t{cfg.slice.time:g}.vtk"
            )
            write_vtk_slice(mesh, u_full, cfg.slice, vtk_path)
            outputs.append(vtk_path)
    report = {
        "divisions": list(cfg.divisions),
        "extents": list(cfg.extents),
        "time_periodic": cfg.time_periodic,
        "scenario": cfg.scenario,
        "solver": cfg.solver,
        "n_free_u": int(system.A.shape[0]),
        "n_free_sigma": int(system.B.shape[0]),
        "iterations": result.iterations,
        "converged": bool(result.converged),
        "residual_primal": float(result.residual_primal[-1])
        if result.residual_primal.size
        else 0.0,
        "residual_constraint": float(result.residual_constraint[-1])
        if result.residual_constraint.size
        else 0.0,
        "outputs": outputs,
    }
    report_path = os.path.join(out_dir, "solve_report.json")
    with open(report_path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")
    print(report_path)
    if not result.converged:
        print("solver did not converge", file=sys.stderr)
        return EXIT_NOCONV
    return EXIT_OK


def cmd_check_complex(cfg):
    mesh = build_mesh(cfg.divisions, cfg.extents, time_periodic=cfg.time_periodic)
    d0 = dofs.build_dofmap(mesh, 0)
    d1 = dofs.build_dofmap(mesh, 1)
    d2 = dofs.build_dofmap(mesh, 2)
    D0 = dofs.assemble_D0(mesh, d0, d1)
    D1 = dofs.assemble_D1(mesh, d1, d2)
    prod = D1 @ D0
    max_entry = 0.0 if prod.nnz == 0 else float(np.abs(prod.data).max())
    print(f"D1*D0 max |entry| = {_fmt_compact_exp(max_entry)}")
    if d1.total <= 2000:
        source, lifting = _make_source_and_lifting(cfg, mesh)
        system = assembly.build_system(mesh, source, lifting=lifting)
        report = dofs.harmonic_diagnostics(system)
        print(f"dim H_h^1 = {report.dim_h1}")
        print(f"saddle min singular value = {report.min_singular_saddle:.6e}")
    else:
        print(
            f"harmonic diagnostics skipped ({d1.total} 1-form DOFs > 2000)",
            file=sys.stderr,
        )
    return EXIT_OK


def cmd_mesh_info(cfg):
    mesh = build_mesh(cfg.divisions, cfg.extents, time_periodic=cfg.time_periodic)
    names = ("nodes", "edges", "faces", "3-cells", "4-cells")
    print(f"divisions = {mesh.divisions}, extents = {mesh.extents}, h = {mesh.h!r}")
    print(f"time_periodic = {mesh.time_periodic}")
    for dim, name in enumerate(names):
        lateral = int(mesh.lateral_mask(dim).sum())
        print(f"{name}: {mesh.entity_count(dim)} total, {lateral} lateral")
    return EXIT_OK


# ----------------------------------------------------------------------
# argument parsing
# ----------------------------------------------------------------------


def _add_mesh_args(p):
    p.add_argument("--divisions", help="cells per axis: nt,nx,ny,nz")
    p.add_argument("--extents", help="box lengths: T,Lx,Ly,Lz")
    p.add_argument("--time-periodic", action="store_true", default=None)
    p.add_argument("--config", help="flat key=value config file")


def build_parser():
    ap = argparse.ArgumentParser(
        prog="hodge4d",
        description="space-time solver for periodic steady-state potentials",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convergence", help="manufactured-solution convergence study")
    _add_mesh_args(p)
    p.add_argument("--levels", required=True, help="per-axis divisions, e.g. 4,6,8")
    p.add_argument("--scenario", default=None)
    p.add_argument("--solver", default=None, choices=("aha", "krylov", "mixed"))
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--err-quad", type=int, default=None)
    p.add_argument("--load-quad", type=int, default=None)
    p.add_argument("--out", default=None, help="output CSV path")

    p = sub.add_parser("solve", help="solve one scenario, write report and slices")
    _add_mesh_args(p)
    p.add_argument("--scenario", default=None)
    p.add_argument("--solver", default=None, choices=("aha", "krylov", "mixed"))
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--load-quad", type=int, default=None)
    p.add_argument("--slice", default=None, help="e.g. z=0.5,t=0")
    p.add_argument(
        "--augment",
        default=None,
        help="alternating-solver augmentation weight, or 'auto' "
        "(needed for loads with a weak-gradient component)",
    )
    p.add_argument("--out-dir", default=None)

    p = sub.add_parser("check-complex", help="derivative and harmonic diagnostics")
    _add_mesh_args(p)

    p = sub.add_parser("mesh-info", help="entity counts and boundary tallies")
    _add_mesh_args(p)
    return ap


def _config_from_args(args):
    cfg = load_config(args.config) if getattr(args, "config", None) else RunConfig()
    if getattr(args, "divisions", None):
        cfg.divisions = _parse_tuple(args.divisions, int)
    if getattr(args, "extents", None):
        cfg.extents = _parse_tuple(args.extents, float)
    if getattr(args, "time_periodic", None) is not None:
        cfg.time_periodic = args.time_periodic
    if getattr(args, "scenario", None):
        cfg.scenario = args.scenario
    if getattr(args, "solver", None):
        cfg.solver = args.solver
    if getattr(args, "tol", None) is not None:
        cfg.tol = args.tol
    if getattr(args, "err_quad", None) is not None:
        cfg.error_quadrature = args.err_quad
    if getattr(args, "load_quad", None) is not None:
        cfg.load_quadrature = args.load_quad
    if getattr(args, "levels", None):
        cfg.levels = _parse_tuple(args.levels, int)
    if getattr(args, "out", None):
        cfg.out = args.out
    if getattr(args, "augment", None) is not None:
        cfg.augment = args.augment if args.augment == "auto" else float(args.augment)
    if getattr(args, "out_dir", None):
        cfg.out_dir = args.out_dir
    if getattr(args, "slice", None):
        cfg.slice = SliceSpec.parse(args.slice)
    return cfg.validate()


def run_cli(argv=None):
    """Parse arguments, dispatch, and return the exit code."""
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        cfg = _config_from_args(args)
    except (ValueError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    handlers = {
        "convergence": cmd_convergence,
        "solve": cmd_solve,
        "check-complex": cmd_check_complex,
        "mesh-info": cmd_mesh_info,
    }
    try:
        return handlers[args.command](cfg)
    except ValueError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except solvers.DivergedError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_NOCONV


def main():
    sys.exit(run_cli())


if __name__ == "__main__":
    main()

"""Parsers for the solver's output files.

Reads exactly the two formats the hodge4d CLI emits: the ``N,h,E,rate``
convergence CSV and legacy ASCII VTK structured-points slices carrying
``phi_avg`` cell scalars and ``A_avg`` cell vectors.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ConvergenceTable:
    N: np.ndarray
    h: np.ndarray
    error: np.ndarray
    rate: np.ndarray  # nan where absent


@dataclass(frozen=True)
class SliceData:
    """One 2D cell-data slice: scalar field, vector field, grid geometry."""

    dims: tuple  # cell counts (n1, n2)
    spacing: tuple
    origin: tuple
    phi: np.ndarray  # (n1, n2)
    vectors: np.ndarray  # (n1, n2, 3)
    plane_axes: tuple  # e.g. ("x", "y")
    title: str


def read_convergence_csv(path):
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "N,h,E,rate":
            raise ValueError(f"{path}: unexpected header {header!r}")
        rows = []
        for line in fh:
            line = line.strip()
            if not line:
                continue
            n, h, e, rate = line.split(",")
            rows.append((int(n), float(h), float(e), float(rate) if rate else np.nan))
    if not rows:
        raise ValueError(f"{path}: no data rows")
    arr = np.array(rows, dtype=float)
    return ConvergenceTable(
        N=arr[:, 0].astype(int), h=arr[:, 1], error=arr[:, 2], rate=arr[:, 3]
    )


def read_vtk_slice(path):
    """Parse a legacy ASCII structured-points file with cell data."""
    with open(path, encoding="utf-8") as fh:
        lines = [l.rstrip("\n") for l in fh]
    if not lines or not lines[0].startswith("# vtk DataFile"):
        raise ValueError(f"{path}: not a legacy VTK file")
    title = lines[1] if len(lines) > 1 else ""
    try:
        fmt = lines[2].strip()
        dataset = lines[3].strip()
    except IndexError as exc:
        raise ValueError(f"{path}: truncated VTK header") from exc
    if fmt != "ASCII" or dataset != "DATASET STRUCTURED_POINTS":
        raise ValueError(f"{path}: expected ASCII STRUCTURED_POINTS")

    meta = {}
    i = 4
    while i < len(lines) and not lines[i].startswith("CELL_DATA"):
        key, *vals = lines[i].split()
        meta[key] = vals
        i += 1
    if i == len(lines):
        raise ValueError(f"{path}: missing CELL_DATA block")
    try:
        n_cells = int(lines[i].split()[1])
        point_dims = [int(v) for v in meta["DIMENSIONS"]]
    except (KeyError, IndexError, ValueError) as exc:
        raise ValueError(f"{path}: malformed structured-points header") from exc
    dims = tuple(max(d - 1, 1) for d in point_dims if d > 1)
    if len(dims) != 2 or dims[0] * dims[1] != n_cells:
        raise ValueError(f"{path}: unsupported cell layout {point_dims}")
    spacing = tuple(float(v) for v in meta.get("SPACING", ["1", "1", "1"])[:2])
    origin = tuple(float(v) for v in meta.get("ORIGIN", ["0", "0", "0"])[:2])

    i += 1
    phi = None
    vectors = None
    try:
        while i < len(lines):
            line = lines[i].strip()
            if line.startswith("SCALARS"):
                name = line.split()[1]
                i += 1
                if i < len(lines) and lines[i].startswith("LOOKUP_TABLE"):
                    i += 1
                vals = [float(lines[i + k]) for k in range(n_cells)]
                i += n_cells
                if name == "phi_avg":
                    phi = np.array(vals)
            elif line.startswith("VECTORS"):
                i += 1
                rows = [
                    [float(x) for x in lines[i + k].split()] for k in range(n_cells)
                ]
                i += n_cells
                vectors = np.array(rows)
            elif not line:
                i += 1
            else:
                raise ValueError(f"{path}: unexpected VTK directive {line!r}")
    except (IndexError, ValueError) as exc:
        if isinstance(exc, ValueError) and str(exc).startswith(str(path)):
            raise
        raise ValueError(f"{path}: truncated or malformed data block") from exc
    if phi is None:
        raise ValueError(f"{path}: missing phi_avg scalars")
    if vectors is None:
        raise ValueError(f"{path}: missing A_avg vectors")

    # values run fastest along the first declared axis
    phi = phi.reshape(dims[1], dims[0]).T
    vectors = vectors.reshape(dims[1], dims[0], 3).transpose(1, 0, 2)
    m = re.search(r"\((\w),(\w)\) plane", title)
    plane_axes = (m.group(1), m.group(2)) if m else ("x", "y")
    return SliceData(
        dims=dims,
        spacing=spacing,
        origin=origin,
        phi=phi,
        vectors=vectors,
        plane_axes=plane_axes,
        title=title,
    )

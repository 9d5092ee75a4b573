"""Figure emitters: log-log convergence plots and slice heatmap/quiver images.

Batch artifacts only; the Agg backend is forced so no display is needed.
"""

from __future__ import annotations

from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .io import read_convergence_csv, read_vtk_slice

AXIS_INDEX = {"x": 0, "y": 1, "z": 2}


@dataclass(frozen=True)
class PlotJob:
    """One figure: input path, output image path, kind, optional fit window.

    kind is "loglog" or "slice"; `window` restricts the slope fit to rows
    window[0]:window[1] of the CSV (loglog only).
    """

    input_path: str
    output_path: str
    kind: str = "loglog"
    window: tuple | None = None


def fit_slope(h, error):
    """Least-squares slope of log(error) against log(h)."""
    x = np.log(np.asarray(h, dtype=float))
    y = np.log(np.asarray(error, dtype=float))
    xm, ym = x.mean(), y.mean()
    return float(((x - xm) @ (y - ym)) / ((x - xm) @ (x - xm)))


def plot_convergence(csv_path, out_path, window=None):
    """Render the error-vs-h study on log-log axes; returns the fitted slope.

    Needs at least two rows (two in the fit window, if one is given).
    """
    table = read_convergence_csv(csv_path)
    h, err = table.h, table.error
    if window is not None:
        h, err = h[window[0] : window[1]], err[window[0] : window[1]]
    if h.size < 2:
        raise ValueError("slope fit needs at least two rows")
    slope = fit_slope(h, err)

    fig, ax = plt.subplots(figsize=(5, 4))
    ax.loglog(table.h, table.error, "o-", label="measured error")
    ref = err[0] * (h / h[0]) ** slope
    ax.loglog(h, ref, "k--", alpha=0.6, label=f"slope {slope:.3f}")
    ax.set_xlabel("h")
    ax.set_ylabel("error")
    ax.invert_xaxis()
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    ax.set_title(f"convergence, fitted slope {slope:.4f}")
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return slope


def plot_slice(vtk_path, out_path, kind="both"):
    """Render a slice file: scalar heatmap and/or in-plane vector quiver."""
    if kind not in ("heatmap", "quiver", "both"):
        raise ValueError(f"unknown slice plot kind {kind!r}")
    data = read_vtk_slice(vtk_path)
    n1, n2 = data.dims
    x = data.origin[0] + (np.arange(n1) + 0.5) * data.spacing[0]
    y = data.origin[1] + (np.arange(n2) + 0.5) * data.spacing[1]
    X, Y = np.meshgrid(x, y, indexing="ij")

    panels = 2 if kind == "both" else 1
    fig, axes = plt.subplots(1, panels, figsize=(5 * panels, 4.2), squeeze=False)
    col = 0
    if kind in ("heatmap", "both"):
        ax = axes[0][col]
        im = ax.pcolormesh(X, Y, data.phi, shading="nearest", cmap="viridis")
        fig.colorbar(im, ax=ax, fraction=0.046)
        ax.set_title("scalar part, cell averages")
        ax.set_aspect("equal")
        col += 1
    if kind in ("quiver", "both"):
        ax = axes[0][col]
        i1 = AXIS_INDEX[data.plane_axes[0]]
        i2 = AXIS_INDEX[data.plane_axes[1]]
        u = data.vectors[:, :, i1]
        v = data.vectors[:, :, i2]
        ax.quiver(X, Y, u, v)
        ax.set_title("vector part, in-plane cell averages")
        ax.set_aspect("equal")
    for row in axes:
        for ax in row:
            ax.set_xlabel(data.plane_axes[0])
            ax.set_ylabel(data.plane_axes[1])
    fig.suptitle(data.title, fontsize=8)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def run_job(job):
    if job.kind == "loglog":
        return plot_convergence(job.input_path, job.output_path, window=job.window)
    if job.kind == "slice":
        return plot_slice(job.input_path, job.output_path)
    raise ValueError(f"unknown plot kind {job.kind!r}")

"""Frontend tests: parsers, slope fits, figure rendering, acceptance checks."""

import hashlib
import os

import numpy as np
import pytest

from hodge4d_plots import (
    PlotJob,
    fit_slope,
    plot_convergence,
    plot_slice,
    read_convergence_csv,
    read_vtk_slice,
    run_job,
)

DATA = os.path.join(os.path.dirname(__file__), "data")
REFERENCE_CSV = os.path.join(DATA, "reference_table.csv")
EXAMPLE2_VTK = os.path.join(DATA, "example2_slice.vtk")

# golden fingerprint of the parsed example-2 slice payload (dims + fields)
EXAMPLE2_PAYLOAD_SHA256 = (
    "1801537ca14679a89500f2107e584e3f5ddcded23c3532b476571ad5b49140c0"
)


def write_csv(path, rows):
    lines = ["N,h,E,rate"]
    for n, h, e, r in rows:
        rate = "" if r is None else repr(float(r))
        lines.append(f"{int(n)},{float(h)!r},{float(e)!r},{rate}")
    path.write_text("\n".join(lines) + "\n")


# ----------------------------------------------------------------------
# convergence plots
# ----------------------------------------------------------------------


def test_exact_quadratic_rows_give_slope_two(tmp_path):
    rows = [(n**4, 1.0 / n, (1.0 / n) ** 2, None) for n in (4, 8, 16, 32)]
    csv = tmp_path / "quad.csv"
    write_csv(csv, rows)
    out = tmp_path / "quad.png"
    slope = plot_convergence(csv, out)
    assert abs(slope - 2.0) <= 1e-9
    assert out.exists() and out.stat().st_size > 0


def test_slope_matches_closed_form_least_squares(tmp_path):
    rng = np.random.default_rng(3)
    hs = 1.0 / np.array([4, 6, 8, 12, 16])
    errs = 2.3 * hs**1.87 * np.exp(rng.normal(0, 0.02, hs.size))
    csv = tmp_path / "noisy.csv"
    write_csv(csv, [(int(1 / h) ** 4, h, e, None) for h, e in zip(hs, errs)])
    slope = plot_convergence(csv, tmp_path / "noisy.png")
    # independent closed-form least squares on the same rows
    x = np.log(hs)
    y = np.log(errs)
    n = x.size
    want = (n * (x @ y) - x.sum() * y.sum()) / (n * (x @ x) - x.sum() ** 2)
    assert abs(slope - want) <= 1e-12


def test_reference_table_slope_in_band(tmp_path):
    slope = plot_convergence(REFERENCE_CSV, tmp_path / "ref.png")
    ok = 1.94 <= slope <= 2.00
    print(f"[{'PASS' if ok else 'FAIL'}] reference-table slope: {slope:.5f}")
    assert ok


def test_single_row_rejected(tmp_path):
    csv = tmp_path / "one.csv"
    write_csv(csv, [(256, 0.25, 0.1, None)])
    with pytest.raises(ValueError):
        plot_convergence(csv, tmp_path / "one.png")


def test_fit_window(tmp_path):
    rows = [(16, 0.5, 0.3, None), (81, 1 / 3, 0.2, None), (256, 0.25, 0.1125, None)]
    csv = tmp_path / "win.csv"
    write_csv(csv, rows)
    job = PlotJob(str(csv), str(tmp_path / "win.png"), kind="loglog", window=(1, 3))
    slope = run_job(job)
    assert abs(slope - fit_slope([1 / 3, 0.25], [0.2, 0.1125])) <= 1e-12
    with pytest.raises(ValueError):
        plot_convergence(csv, tmp_path / "win.png", window=(0, 1))


def test_csv_parse_errors(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b,c\n")
    with pytest.raises(ValueError):
        read_convergence_csv(bad)
    empty = tmp_path / "empty.csv"
    empty.write_text("N,h,E,rate\n")
    with pytest.raises(ValueError):
        read_convergence_csv(empty)


# ----------------------------------------------------------------------
# slice plots
# ----------------------------------------------------------------------


def make_vtk(path, phi_rows, vec_rows, n1=2, n2=2):
    lines = [
        "# vtk DataFile Version 3.0",
        "synthetic slice (x,y) plane",
        "ASCII",
        "DATASET STRUCTURED_POINTS",
        f"DIMENSIONS {n1 + 1} {n2 + 1} 1",
        "ORIGIN 0.0 0.0 0.0",
        "SPACING 0.5 0.5 1.0",
        f"CELL_DATA {n1 * n2}",
        "SCALARS phi_avg double 1",
        "LOOKUP_TABLE default",
        *[repr(float(v)) for v in phi_rows],
    ]
    if vec_rows is not None:
        lines.append("VECTORS A_avg double")
        lines.extend(" ".join(repr(float(c)) for c in row) for row in vec_rows)
    path.write_text("\n".join(lines) + "\n")


def test_constant_scalar_gives_uniform_heatmap(tmp_path):
    vtk = tmp_path / "const.vtk"
    make_vtk(vtk, [3.5] * 4, [[0, 0, 0]] * 4)
    data = read_vtk_slice(vtk)
    assert np.all(data.phi == 3.5)
    out = tmp_path / "const.png"
    plot_slice(vtk, out, kind="heatmap")
    assert out.exists() and out.stat().st_size > 0


def test_missing_vectors_rejected(tmp_path):
    vtk = tmp_path / "novec.vtk"
    make_vtk(vtk, [1.0] * 4, None)
    with pytest.raises(ValueError):
        plot_slice(vtk, tmp_path / "novec.png")


def test_parse_failures(tmp_path):
    junk = tmp_path / "junk.vtk"
    junk.write_text("not a vtk file\n")
    with pytest.raises(ValueError):
        read_vtk_slice(junk)
    with pytest.raises(ValueError):
        plot_slice(junk, tmp_path / "junk.png")
    with pytest.raises(ValueError):
        plot_slice(EXAMPLE2_VTK, tmp_path / "x.png", kind="sideways")


def test_example2_slice_payload_and_rendering(tmp_path):
    data = read_vtk_slice(EXAMPLE2_VTK)
    digest = hashlib.sha256()
    digest.update(np.asarray(data.dims, dtype=np.int64).tobytes())
    digest.update(data.phi.tobytes())
    digest.update(data.vectors.tobytes())
    assert digest.hexdigest() == EXAMPLE2_PAYLOAD_SHA256

    out = tmp_path / "example2.png"
    plot_slice(EXAMPLE2_VTK, out, kind="both")
    ok = out.exists() and out.stat().st_size > 0
    print(f"[{'PASS' if ok else 'FAIL'}] example-2 slice renders: {out}")
    assert ok

    # the in-plane averages circulate around the domain center: the
    # azimuthal component dominates the radial one in the vector part
    n1, n2 = data.dims
    x = (np.arange(n1) + 0.5) * data.spacing[0] - 0.5
    y = (np.arange(n2) + 0.5) * data.spacing[1] - 0.5
    X, Y = np.meshgrid(x, y, indexing="ij")
    r = np.hypot(X, Y)
    u, v = data.vectors[:, :, 0], data.vectors[:, :, 1]
    azimuthal = np.abs((-Y * u + X * v) / r)
    radial = np.abs((X * u + Y * v) / r)
    assert azimuthal.sum() > 5 * radial.sum()


def test_truncated_vtk_rejected(tmp_path):
    vtk = tmp_path / "trunc.vtk"
    make_vtk(vtk, [1.0] * 4, [[0, 0, 0]] * 4)
    text = vtk.read_text().splitlines()
    vtk.write_text("\n".join(text[:-3]) + "\n")  # drop vector rows
    with pytest.raises(ValueError):
        read_vtk_slice(vtk)
    nohdr = tmp_path / "nohdr.vtk"
    nohdr.write_text(
        "# vtk DataFile Version 3.0\nt\nASCII\nDATASET STRUCTURED_POINTS\nCELL_DATA 4\n"
    )
    with pytest.raises(ValueError):
        read_vtk_slice(nohdr)

"""CLI subcommands, CSV/VTK serialization, exit codes."""

import json
import math

import numpy as np
import pytest

from hodge4d import assembly, cli, scenarios, solvers
from hodge4d.cli import SliceSpec, read_csv, write_csv, write_vtk_slice
from hodge4d.mesh import T_AXIS, build_mesh
from hodge4d.scenarios import ConvergenceRecord

UNIT = (1.0, 1.0, 1.0, 1.0)


# ----------------------------------------------------------------------
# CSV
# ----------------------------------------------------------------------


def test_csv_single_record(tmp_path):
    path = tmp_path / "one.csv"
    write_csv([ConvergenceRecord(N=256, h=0.25, error=0.125)], path)
    lines = path.read_text().splitlines()
    assert lines == ["N,h,E,rate", "256,0.25,0.125,"]


def test_csv_round_trip_bitwise(tmp_path):
    records = [
        ConvergenceRecord(N=16, h=0.5, error=1.0 / 3.0),
        ConvergenceRecord(N=81, h=1.0 / 3.0, error=math.pi * 1e-3, rate=1.9471823),
        ConvergenceRecord(N=256, h=0.25, error=2.2e-16, rate=2.0000001),
    ]
    path = tmp_path / "conv.csv"
    write_csv(records, path)
    back = read_csv(path)
    assert back == records


def test_csv_reference_level_row_format(tmp_path):
    path = tmp_path / "ref.csv"
    write_csv([ConvergenceRecord(N=20736, h=1.0 / 12.0, error=0.017057)], path)
    assert path.read_text().splitlines()[1].startswith("20736,0.0833")


def test_csv_rejects_out_of_order(tmp_path):
    records = [
        ConvergenceRecord(N=81, h=1.0 / 3.0, error=0.1),
        ConvergenceRecord(N=16, h=0.5, error=0.3),
    ]
    with pytest.raises(ValueError):
        write_csv(records, tmp_path / "bad.csv")
    with pytest.raises(ValueError):
        write_csv([], tmp_path / "empty.csv")


# ----------------------------------------------------------------------
# VTK slices
# ----------------------------------------------------------------------


def test_vtk_constant_scalar_field(tmp_path):
    mesh = build_mesh((2, 2, 2, 2), UNIT)
    full = np.zeros(mesh.entity_count(1))
    off = mesh.class_offset(1, (T_AXIS,))
    full[off : off + mesh.class_count(1, (T_AXIS,))] = 7.25
    path = tmp_path / "slice.vtk"
    write_vtk_slice(mesh, full, SliceSpec("z", 0.5, 0.0), path)
    text = path.read_text().splitlines()
    assert text[0] == "# vtk DataFile Version 3.0"
    assert "DATASET STRUCTURED_POINTS" in text
    assert "DIMENSIONS 3 3 1" in text
    i = text.index("LOOKUP_TABLE default")
    scalars = np.array([float(v) for v in text[i + 1 : i + 5]])
    assert np.abs(scalars - 7.25).max() <= 1e-12
    assert "VECTORS A_avg double" in text


def test_vtk_slice_errors(tmp_path):
    mesh = build_mesh((2, 2, 2, 2), UNIT)
    full = np.zeros(mesh.entity_count(1))
    with pytest.raises(ValueError):
        write_vtk_slice(mesh, full, SliceSpec("x", 1.5, 0.0), tmp_path / "x.vtk")
    with pytest.raises(ValueError):
        write_vtk_slice(mesh, full, SliceSpec("x", 0.5, 2.0), tmp_path / "x.vtk")
    with pytest.raises(ValueError):
        SliceSpec.parse("t=0")
    with pytest.raises(ValueError):
        SliceSpec.parse("w=0.5")


def test_vtk_example1_symmetry_under_xy_swap(tmp_path):
    """The manufactured problem maps onto itself under x<->y together with
    swapping the first two vector components; cell averages inherit this."""
    mesh = build_mesh((4, 4, 4, 4), UNIT)
    system = assembly.build_system(mesh, scenarios.example1_source)
    res = solvers.krylov_reference(system, tol=1e-12)
    u_full = system.dof1.expand(res.u.values)
    path = tmp_path / "sym.vtk"
    write_vtk_slice(mesh, u_full, SliceSpec("z", 0.6, 0.25), path)
    nx = ny = 4
    text = path.read_text().splitlines()
    i = text.index("VECTORS A_avg double")
    vecs = np.array(
        [[float(x) for x in line.split()] for line in text[i + 1 : i + 1 + nx * ny]]
    ).reshape(ny, nx, 3)  # VTK order: first declared axis fastest
    swapped = np.transpose(vecs, (1, 0, 2))[:, :, [1, 0, 2]]
    assert np.abs(vecs - swapped).max() <= 1e-10


# ----------------------------------------------------------------------
# subcommands and exit codes
# ----------------------------------------------------------------------


def test_cli_convergence_writes_csv(tmp_path, capsys):
    out = tmp_path / "conv.csv"
    code = cli.run_cli(
        ["convergence", "--levels", "2,3,4", "--scenario", "example1", "--out", str(out)]
    )
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "N,h,E,rate"
    assert len(lines) == 4  # header + one row per level
    assert lines[1].startswith("16,0.5,")
    records = read_csv(out)
    assert records[1].rate is not None


def test_cli_check_complex_output(capsys):
    code = cli.run_cli(["check-complex", "--divisions", "2,2,2,2"])
    assert code == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "D1*D0 max |entry| = 0.0e0"
    assert out[1] == "dim H_h^1 = 0"


def test_cli_mesh_info(capsys):
    code = cli.run_cli(["mesh-info", "--divisions", "1,1,1,1"])
    assert code == 0
    out = capsys.readouterr().out
    assert "nodes: 16 total" in out
    assert "edges: 32 total" in out


def test_cli_solve_example2_writes_vtk_and_report(tmp_path, monkeypatch):
    monkeypatch.setenv("HODGE4D_OUT", str(tmp_path))
    code = cli.run_cli(
        [
            "solve",
            "--scenario",
            "example2",
            "--divisions",
            "2,4,4,4",
            "--slice",
            "z=0.5,t=0",
        ]
    )
    assert code == 0
    report = json.loads((tmp_path / "solve_report.json").read_text())
    assert report["converged"] is True
    assert report["scenario"] == "example2"
    vtk_files = list(tmp_path.glob("*.vtk"))
    assert len(vtk_files) == 1
    first = vtk_files[0].read_text().splitlines()[0]
    assert first == "# vtk DataFile Version 3.0"
    assert report["outputs"] == [str(vtk_files[0])]


def test_cli_exit_codes(tmp_path):
    # config errors
    assert cli.run_cli(["solve", "--divisions", "0,1,1,1"]) == 2
    assert cli.run_cli(["solve", "--scenario", "bogus"]) == 2
    # levels out of refinement order surface as a config error
    assert cli.run_cli(["convergence", "--levels", "4,3"]) == 2
    # solver non-convergence: one iteration of the alternating scheme
    cfg = tmp_path / "cfg.txt"
    cfg.write_text(
        "mesh.divisions=2,2,2,2\n"
        "scenario.kind=example1\n"
        "solver.kind=aha\n"
        "solver.max_iter=1\n"
        "solver.tol=1e-12\n"
        f"output.dir={tmp_path}\n"
    )
    assert cli.run_cli(["solve", "--config", str(cfg)]) == 3


def test_cli_custom_constant_source(tmp_path):
    cfg = tmp_path / "cfg.txt"
    cfg.write_text(
        "mesh.divisions=2,2,2,2\n"
        "scenario.kind=custom\n"
        "source.constant=1.0,0,0,0\n"
        f"output.dir={tmp_path}\n"
    )
    assert cli.run_cli(["solve", "--config", str(cfg)]) == 0
    report = json.loads((tmp_path / "solve_report.json").read_text())
    assert report["scenario"] == "custom"
    assert report["converged"] is True


def test_config_file_errors(tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("mesh.divisions 2,2,2,2\n")
    with pytest.raises(ValueError):
        cli.load_config(bad)
    bad.write_text("nope.key=1\n")
    with pytest.raises(ValueError):
        cli.load_config(bad)
    good = tmp_path / "good.txt"
    good.write_text(
        "# comment\n\nmesh.divisions=2,3,2,2\nscenario.v0=55.0\nslice=x=0.5,t=0.1\n"
    )
    cfg = cli.load_config(good)
    assert cfg.divisions == (2, 3, 2, 2)
    assert cfg.example2.voltage_amplitude == 55.0
    assert cfg.slice.axis == "x"


def test_cli_outputs_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for out in (a, b):
        assert cli.run_cli(["convergence", "--levels", "2,3", "--out", str(out)]) == 0
    assert a.read_bytes() == b.read_bytes()

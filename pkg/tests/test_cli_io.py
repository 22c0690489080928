import csv
import json
import shutil
import subprocess

import numpy as np
import pytest

import mwg_obstacle.adapt as adapt_mod
from mwg_obstacle.adapt import RunRecord
from mwg_obstacle.cli import RunConfig, build_parser, config_from_args, main
from mwg_obstacle.io import CSV_COLUMNS, CsvLog, _fmt, read_csv, read_vtk_cells, record_row, write_vtk
from mwg_obstacle.mesh import LShape, build_initial_mesh
from mwg_obstacle.solver import SolverError


def strip_wall(path):
    rows = list(csv.reader(open(path, newline="")))
    col = rows[0].index("wall_s")
    return [r[:col] + r[col + 1:] for r in rows]


def test_three_level_run(tmp_path):
    out = tmp_path / "d"
    assert main(["--problem", "example2", "--max-levels", "3", "--out", str(out)]) == 0
    rows = read_csv(out / "run.csv")
    assert len(rows) == 3
    assert tuple(rows[0].keys()) == CSV_COLUMNS
    assert (out / "run.csv").read_text().splitlines()[0] == ",".join(CSV_COLUMNS)
    summary = json.loads((out / "summary.json").read_text())
    assert summary["levels"] == 3
    assert summary["config"]["problem"] == "example2"
    assert summary["final"]["ndof"] == int(rows[-1]["ndof"])
    # min(8, levels - 2) = 1 row is too few for a slope
    assert summary["slopes"]["eta_total"] is None


def test_summary_slopes(tmp_path):
    out = tmp_path / "s"
    assert main(["--problem", "example2", "--max-levels", "6", "--out", str(out)]) == 0
    rows = read_csv(out / "run.csv")
    summary = json.loads((out / "summary.json").read_text())
    assert summary["slopes"]["rows"] == 4
    n = np.log10([float(r["ndof"]) for r in rows[-4:]])
    e = np.log10([float(r["eta_total"]) for r in rows[-4:]])
    assert summary["slopes"]["eta_total"] == pytest.approx(np.polyfit(n, e, 1)[0], rel=1e-12)
    assert summary["slopes"]["energy_error"] is not None


def test_theta_out_of_range(tmp_path, capsys):
    assert main(["--problem", "example2", "--theta", "1.5", "--out", str(tmp_path)]) == 2
    assert "(0, 1)" in capsys.readouterr().err


def test_unknown_problem(tmp_path, capsys):
    assert main(["--problem", "example9", "--out", str(tmp_path)]) == 2
    err = capsys.readouterr().err
    assert "usage" in err and "example9" in err


def test_nonpositive_stop_value(tmp_path):
    assert main(["--problem", "example2", "--max-levels", "0", "--out", str(tmp_path)]) == 2


def test_exclusive_stop_flags(tmp_path):
    with pytest.raises(SystemExit) as info:
        main(["--problem", "example2", "--max-levels", "2", "--max-dof", "10", "--out", str(tmp_path)])
    assert info.value.code == 2


def test_unwritable_output(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["--problem", "example2", "--max-levels", "1", "--out", str(blocker / "sub")]) == 3


def test_solver_failure_keeps_partial_outputs(tmp_path, monkeypatch):
    real = adapt_mod.solve_vi
    calls = {"n": 0}

    def flaky(system, initial_active=None):
        calls["n"] += 1
        if calls["n"] == 3:
            raise SolverError("no convergence")
        return real(system, initial_active=initial_active)

    monkeypatch.setattr(adapt_mod, "solve_vi", flaky)
    out = tmp_path / "p"
    assert main(["--problem", "example2", "--max-levels", "5", "--out", str(out)]) == 4
    assert len(read_csv(out / "run.csv")) == 2
    assert json.loads((out / "summary.json").read_text())["levels"] == 2


def test_determinism_modulo_wall_time(tmp_path):
    args = ["--problem", "example1-fm15", "--max-levels", "4", "--seed", "7"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    assert strip_wall(tmp_path / "a" / "run.csv") == strip_wall(tmp_path / "b" / "run.csv")


def test_vtk_and_matrix_exports(tmp_path):
    out = tmp_path / "v"
    assert main(["--problem", "example3", "--max-levels", "2", "--export-vtk", "--dump-matrices", "--out", str(out)]) == 0
    rows = read_csv(out / "run.csv")
    for k in range(2):
        pts, tris, data = read_vtk_cells(out / f"level_{k}.vtk")
        assert 3 * len(tris) == int(rows[k]["ndof"])
        assert set(data) == {"indicator", "multiplier", "mean_u"}
        assert np.all(data["indicator"] >= 0)
        assert (out / f"level_{k}.mtx").exists()


def test_uniform_flag(tmp_path):
    out = tmp_path / "u"
    assert main(["--problem", "example3", "--uniform", "--max-levels", "3", "--out", str(out)]) == 0
    ndof = [int(r["ndof"]) for r in read_csv(out / "run.csv")]
    assert all(b >= 2 * a for a, b in zip(ndof, ndof[1:]))


def test_config_defaults():
    ns = build_parser().parse_args(["--problem", "example2"])
    cfg = config_from_args(ns)
    assert cfg == RunConfig("example2")
    assert cfg.stop_rule().max_levels == 10
    cfg.validate()
    assert config_from_args(build_parser().parse_args(["--problem", "example2", "--eta-below", "0.1"])).stop_rule().eta_below == 0.1


def test_number_formatting_round_trips():
    for x in (0.1, 1e-300, 123456789.123, 2.0 / 3.0, 5e-324):
        s = _fmt(x)
        assert float(s) == x and "," not in s
    assert _fmt(None) == "" and _fmt(np.int64(7)) == "7"
    rec = RunRecord(0, 12, 0.5, 0.25, 0.125, 0.0, 0.0, 0.6, None, None, 3, 2, 0.01)
    row = record_row(rec)
    assert row[8] == "" and row[9] == "" and row[1] == "12"


def test_csv_log_flushes_each_row(tmp_path):
    log = CsvLog(tmp_path / "r.csv")
    log.write(RunRecord(0, 12, 0.5, 0.25, 0.125, 0.0, 0.0, 0.6, 0.1, 6.0, 3, 2, 0.01))
    # readable before close
    assert len(read_csv(tmp_path / "r.csv")) == 1
    log.close()


def test_vtk_round_trip(tmp_path):
    m = build_initial_mesh(LShape(1.0, 2))
    vals = np.linspace(0, 1, m.n_triangles)
    write_vtk(tmp_path / "m.vtk", m, {"a": vals})
    text = (tmp_path / "m.vtk").read_text()
    assert text.startswith("# vtk DataFile Version 3.0")
    assert f"CELL_TYPES {m.n_triangles}" in text
    pts, tris, data = read_vtk_cells(tmp_path / "m.vtk")
    assert np.array_equal(pts, m.vertices) and np.array_equal(tris, m.triangles)
    assert np.array_equal(data["a"], vals)
    with pytest.raises(ValueError):
        write_vtk(tmp_path / "bad.vtk", m, {"a": vals[:-1]})


@pytest.mark.skipif(shutil.which("mwg-obstacle") is None, reason="console script not installed")
def test_console_script(tmp_path):
    res = subprocess.run(["mwg-obstacle", "--problem", "example2", "--theta", "2"], capture_output=True, text=True)
    assert res.returncode == 2
    res = subprocess.run(["mwg-obstacle", "--problem", "example1-f0", "--max-levels", "1", "--out", str(tmp_path)],
                         capture_output=True, text=True)
    assert res.returncode == 0 and (tmp_path / "run.csv").exists()

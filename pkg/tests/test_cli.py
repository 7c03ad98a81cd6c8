import csv
import json

import numpy as np
import pytest

from chebylab.cli import main

from conftest import scenario_json, scenario_path


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.mark.parametrize("name,code", [("halfspace_l2", 0), ("sphere_l2", 1), ("two_points_l2", 1),
                                       ("box_linf", 1)])
def test_analyze_exit_codes(tmp_path, capsys, name, code):
    out = tmp_path / "report.json"
    got, _, err = run(capsys, "analyze", "--config", scenario_path(name), "--out", out)
    assert got == code, err
    doc = json.loads(out.read_text())
    assert doc["scenario"]["name"] == name
    assert (tmp_path / "report.csv").exists()


def test_analyze_truncated_config(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(scenario_path("halfspace_l2").read_text()[:40])
    code, _, err = run(capsys, "analyze", "--config", bad)
    assert code == 3 and "invalid JSON" in err


def test_analyze_names_offending_field(tmp_path, capsys):
    d = scenario_json("halfspace_l2")
    d["set"]["radius"] = 2
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(d))
    code, _, err = run(capsys, "analyze", "--config", bad)
    assert code == 3 and "radius" in err


def test_analyze_to_stdout_and_timing(capsys):
    code, out, _ = run(capsys, "analyze", "--config", scenario_path("halfspace_l2"), "--timing")
    assert code == 0
    assert json.loads(out)["wall_clock_seconds"] >= 0


def test_norm_info(capsys):
    code, out, _ = run(capsys, "norm-info", "--p", "2", "--dim", "2", "--point", "3,4")
    assert code == 0
    assert "strictly convex: yes" in out and "dual strictly convex: yes" in out
    assert "smooth at [3, 4]: yes" in out and "f=[0.6, 0.8]" in out
    code, out, _ = run(capsys, "norm-info", "--p", "1", "--point", "1,0")
    assert "smooth at [1, 0]: no" in out and "f=[1, 1]" in out and "f=[1, -1]" in out
    code, out, _ = run(capsys, "norm-info", "--p", "inf")
    assert "strictly convex: no" in out
    code, _, err = run(capsys, "norm-info", "--p", "0.5")
    assert code == 3 and "p must be >= 1" in err


def test_chebyshev_scan(tmp_path, capsys):
    assert run(capsys, "chebyshev-scan", "--config", scenario_path("halfspace_l2"))[0] == 0
    out = tmp_path / "w.csv"
    code, _, _ = run(capsys, "chebyshev-scan", "--config", scenario_path("two_points_l2"), "--out", out)
    assert code == 1
    rows = list(csv.DictReader(out.open()))
    for r in rows:  # witnesses lie on the bisector x1 = 0
        assert float(r["point"].split()[0]) == 0.0
        assert r["minimizer_count"] == "2"
    code, out_text, _ = run(capsys, "chebyshev-scan", "--config", scenario_path("box_linf"))
    assert code == 1
    assert all(int(r["minimizer_count"]) > 1 for r in csv.DictReader(out_text.splitlines()))


def test_plot_data(tmp_path, capsys):
    code, _, _ = run(capsys, "plot-data", "--config", scenario_path("sphere_l2"), "--out", tmp_path,
                     "--counts", 11)
    assert code == 0
    for f in ("dK_grid.csv", "condv_grid.csv", "minimizers.csv"):
        assert (tmp_path / f).exists()
    cond = {r["index"]: float(r["cond_v"]) for r in csv.DictReader((tmp_path / "condv_grid.csv").open())}
    assert cond["1"] == pytest.approx(-1.0, abs=1e-3)

    code, _, _ = run(capsys, "plot-data", "--config", scenario_path("halfspace_l2"), "--out", tmp_path,
                     "--counts", 9)
    rows = list(csv.DictReader((tmp_path / "dK_grid.csv").open()))
    d = np.array([[float(r["x0"]), float(r["x1"]), float(r["distance"])] for r in rows])
    np.testing.assert_allclose(d[:, 2], np.maximum(d[:, 0], 0.0), atol=1e-12)


def test_plot_data_rejects_3d(tmp_path, capsys):
    d = scenario_json("halfspace_l2")
    d.update(norm={"kind": "lp", "p": 2, "dim": 3},
             set={"kind": "ball", "center": [0, 0, 0], "radius": 1.0},
             bounding_box=[[-2, 2]] * 3, grid={"points": [[2, 0, 0]]})
    path = tmp_path / "s3.json"
    path.write_text(json.dumps(d))
    code, _, err = run(capsys, "plot-data", "--config", path, "--out", tmp_path)
    assert code == 3 and "2-dimensional" in err


def test_bad_arguments(capsys):
    assert main(["analyze"]) == 3
    assert main(["frobnicate"]) == 3

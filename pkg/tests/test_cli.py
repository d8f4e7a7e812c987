import csv
import json

import numpy as np
import pytest

from lorentz_inverse.cli import main

MINK = {"n": 1, "kind": "minkowski", "entries": {}, "box": [[-10, 10]]}
BUMP = {"n": 1, "kind": "conformal", "entries": {"c": "1 + 0.5*exp(-x1^2)"}, "box": [[-10, 10]]}
TILTED = {"n": 1, "kind": "general", "entries": {"00": "1", "01": "0.3", "11": "-1"}, "box": [[-10, 10]]}


def run(tmp_path, command, body, *extra):
    cfg = tmp_path / f"{command}.json"
    cfg.write_text(json.dumps(body))
    out = tmp_path / "out"
    code = main([command, "--config", str(cfg), "--out", str(out), "--quiet", *extra])
    return code, out


def report(out, name):
    return json.loads((out / name).read_text())


def test_trace_minkowski(tmp_path):
    code, out = run(tmp_path, "trace", {"metric": MINK, "y": [0.0], "eta": [1.0, 0.0], "T": 2.0})
    assert code == 0
    rows = list(csv.reader((out / "trajectory.csv").open()))
    assert rows[0] == ["t", "x0", "x1", "xi0", "xi1", "H"]
    assert float(rows[-1][1]) == pytest.approx(2.0, abs=1e-13)
    rep = report(out, "trace.json")
    assert rep["config"]["metric"]["kind"] == "minkowski"


def test_trace_conformal_diagnostics(tmp_path):
    code, out = run(tmp_path, "trace", {"metric": BUMP, "y": [0.3], "eta": [1.0, 0.2], "T": 1.0})
    assert code == 0
    assert report(out, "trace.json")["diagnostics"]["H_defect"] <= 1e-8


def test_trace_metric_path_relative_to_config(tmp_path):
    (tmp_path / "m.json").write_text(json.dumps(BUMP))
    code, out = run(tmp_path, "trace", {"metric": "m.json", "y": [0.0], "eta": [1.0, 0.0], "T": 1.0})
    assert code == 0


def test_illegal_time_variable(tmp_path, capsys):
    bad = dict(BUMP, entries={"c": "x0+1"})
    code, _ = run(tmp_path, "trace", {"metric": bad, "y": [0.0], "eta": [1.0, 0.0], "T": 1.0})
    assert code == 1
    assert "x0" in capsys.readouterr().err


def test_trace_escape_is_exit_2(tmp_path):
    small = dict(MINK, box=[[-1, 1]])
    code, out = run(tmp_path, "trace", {"metric": small, "y": [0.0], "eta": [1.0, 1.0], "T": 5.0})
    assert code == 2
    assert report(out, "trace.json")["error"]["type"] == "EscapedDomain"


def test_missing_config_is_exit_1(tmp_path):
    assert main(["trace", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path), "--quiet"]) == 1


def test_recover_minkowski_grid(tmp_path):
    code, out = run(tmp_path, "recover", {"metric": MINK, "points": [[-1.0], [0.0], [1.0]]})
    assert code == 0
    rep = report(out, "recovery.json")
    assert len(rep["points"]) == 3 and rep["max_entry_error"] <= 1e-10
    assert set(rep["points"][0]) >= {"y", "Q", "Qinv", "epsilon", "seed", "residual", "status"}


def test_recover_quadrature(tmp_path):
    code, out = run(tmp_path, "recover", {"metric": BUMP, "points": [[0.3]]}, "--mode", "quadrature")
    assert code == 0
    rep = report(out, "recovery.json")
    assert rep["max_entry_error"] <= 1e-6 and rep["config"]["mode"] == "quadrature"


def test_table_pipeline_and_missing_point(tmp_path):
    code, out = run(tmp_path, "length-table", {"metric": TILTED, "points": [[0.0], [0.5]]})
    assert code == 0
    table = out / "lengths.csv"
    assert table.read_text().startswith("n,y1,eta0,eta1,T,R\n")
    code, out = run(tmp_path, "recover", {"table": str(table), "points": [[0.0], [0.5], [1.0]]})
    assert code == 3
    rep = report(out, "recovery.json")
    assert rep["failed_points"] == [[1.0]]
    assert np.allclose(rep["points"][0]["Q"], [[1, 0.3], [0.3, -1]], atol=1e-10)


def test_explicit_queries(tmp_path):
    body = {"metric": MINK, "queries": [{"y": [0.0], "eta": [1.0, 0.0]}, {"y": [0.0], "eta": [1.0, 1.0]}]}
    code, out = run(tmp_path, "length-table", body)
    assert code == 3
    rep = report(out, "length_table.json")
    assert rep["rows"] == 1 and rep["failures"][0]["error"] == "NotTimelike"


def test_boundary_jet(tmp_path):
    code, out = run(tmp_path, "boundary-jet", {"metric": BUMP, "y": [0.0], "normal": [1.0]})
    assert code == 0
    rows = {tuple(r["alpha"]): np.array(r["matrix"]) for r in report(out, "boundary_jet.json")["jet"]["rows"]}
    assert np.max(np.abs(rows[(2,)] - np.diag([-1, 1]))) <= 1e-3


def test_boundary_jet_bad_order(tmp_path):
    code, _ = run(tmp_path, "boundary-jet", {"metric": BUMP, "y": [0.0]}, "--order", "3")
    assert code == 1


RIGID = {"pairs": [{"y": [0.0], "x_T": [0.5], "T": 1.0, "eta0": 1.0}], "grid": {"lo": [-1], "hi": [1], "num": 11}}


def test_rigidity_identical(tmp_path):
    code, out = run(tmp_path, "rigidity", dict(RIGID, g0=MINK, g1=MINK))
    assert code == 0
    rep = report(out, "rigidity.json")
    assert rep["Delta"] == 0 and rep["sup_norm"] == 0 and rep["rigid"]


def test_rigidity_signature_break_is_exit_4(tmp_path):
    bad = {"n": 1, "kind": "diagonal", "entries": {"00": "1", "11": "1"}, "box": [[-10, 10]]}
    # short hop keeps the shot timelike until the 11 entry crosses zero at tau=0.5
    pairs = [{"y": [0.0], "x_T": [0.1], "T": 1.0, "eta0": 1.0}]
    code, out = run(tmp_path, "rigidity", dict(RIGID, g0=MINK, g1=bad, pairs=pairs))
    assert code == 4
    err = report(out, "rigidity.json")["error"]
    assert err["type"] == "SignatureViolation"
    assert "tau=" in err["message"] and "x=" in err["message"]

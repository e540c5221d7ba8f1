import csv
import json
import subprocess
import sys

import pytest

from clique_apsp.cli import CSV_COLUMNS, main


def run(tmp_path, *args):
    out = tmp_path / "out"
    code = main(["run", *args, "--out", str(out)])
    report = json.loads((out / "report.json").read_text())
    with open(out / "runs.csv") as fh:
        rows = list(csv.DictReader(fh))
    return code, report, rows


def strip_timing(report):
    for r in report["runs"]:
        r.pop("timing")
    return report


def test_path8_audit(tmp_path):
    code, rep, rows = run(tmp_path, "--gen", "path:8", "--mode", "full", "--seed", "1", "--audit")
    assert code == 0
    assert rep["soundness_violations"] == 0 and rep["max_ratio"] >= 1
    assert rep["params"]["config"]["quota_c"] == 4 and rep["params"]["config"]["c_sp"] == 8
    assert list(rows[0]) == CSV_COLUMNS
    assert rows[0]["n"] == "8" and rows[0]["seed"] == "1"


def test_deterministic(tmp_path):
    args = ("--gen", "erdos_renyi:64:0.1:w=1-30", "--seed", "3", "--audit")
    a = strip_timing(run(tmp_path / "a", *args)[1])
    b = strip_timing(run(tmp_path / "b", *args)[1])
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)


def test_reps_and_input(tmp_path):
    path = tmp_path / "g.txt"
    from clique_apsp.graph import gen_graph
    gen_graph("grid:4x4:w=1-9", 0).write(path)
    code, rep, rows = run(tmp_path, "--input", str(path), "--mode", "small_diameter", "--reps", "3",
                          "--seed", "5", "--audit")
    assert code == 0
    assert [r["seed"] for r in rows] == ["5", "6", "7"]
    assert len(rep["runs"]) == 3


def test_env_seed(tmp_path, monkeypatch):
    monkeypatch.setenv("CLIQUE_APSP_SEED", "42")
    _, rep, rows = run(tmp_path, "--gen", "path:8")
    assert rep["params"]["seed"] == 42 and rows[0]["seed"] == "42"
    assert rows[0]["max_ratio"] == "" and rep["soundness_violations"] is None


def test_truncated_sweep_monotone(tmp_path):
    _, _, rows = run(tmp_path, "--gen", "erdos_renyi:64:0.1:w=1-50", "--gen", "erdos_renyi:256:0.03:w=1-50",
                     "--gen", "erdos_renyi:1024:0.008:w=1-50", "--mode", "truncated", "--t", "2")
    rounds = [int(r["rounds_total"]) for r in rows]
    assert [r["n"] for r in rows] == ["64", "256", "1024"]
    assert all(r["t"] == "2" for r in rows)
    assert rounds == sorted(rounds)


def test_bad_args():
    with pytest.raises(SystemExit):
        main(["run", "--mode", "full"])
    with pytest.raises(SystemExit):
        main(["run", "--gen", "path:8", "--input", "x", "--out", "o"])


class TestAudit:
    def test_default_passes(self, capsys):
        assert main(["audit", "--seed", "1"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert [l.split(":")[0] for l in lines] == ["[PASS] filter", "[PASS] hopset", "[PASS] skeleton",
                                                   "[PASS] scaling"]

    def test_fault_reports_pair(self, tmp_path, capsys):
        out = tmp_path / "audit.json"
        assert main(["audit", "--suite", "hopset", "--fault", "--out", str(out)]) == 1
        res = json.loads(out.read_text())[0]
        assert not res["passed"] and len(res["counterexample"]) == 2
        assert "[FAIL] hopset" in capsys.readouterr().out

    def test_filter_suite_flags(self, capsys):
        assert main(["audit", "--suite", "filter", "--n", "32", "--i", "4"]) == 0
        assert "[PASS] filter: 200 cases, 0 failures" in capsys.readouterr().out


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "clique_apsp", "run", "--gen", "star:8", "--audit",
                           "--out", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert "unsound=0" in proc.stdout

import csv
import json
import shutil
import subprocess
import sys
from pathlib import Path

import pytest

from qcqpcert.cli import main
from qcqpcert.report import dumps, jsonable, parse_float

INSTANCES = Path(__file__).resolve().parents[1] / "instances"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_certify_alpha1(capsys):
    code, out, _ = run(capsys, "certify", INSTANCES / "ex41_alpha1.json", "--no-meta")
    doc = json.loads(out)
    assert code == 0
    assert all(v == "HOLDS" for v in doc["statuses"].values())
    assert doc["values"]["eta_p"] == pytest.approx(1.0, abs=1e-6)
    assert "meta" not in doc


def test_certify_is_deterministic_without_meta(capsys, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for p in (a, b):
        assert run(capsys, "certify", INSTANCES / "ex41_alpha2.5.json", "--no-meta", "-o", p)[0] == 0
    assert a.read_bytes() == b.read_bytes()


def test_meta_block(capsys):
    _, out, _ = run(capsys, "relax", INSTANCES / "ex41_alpha1.json")
    meta = json.loads(out)["meta"]
    assert meta["command"] == "relax" and "created" in meta and "version" in meta


def test_unbounded_values_are_encoded_as_strings(capsys):
    code, out, _ = run(capsys, "relax", INSTANCES / "ex42.json", "--no-meta")
    doc = json.loads(out)
    assert code == 0 and doc["eta_d"] == "-inf"
    assert parse_float(doc["eta_d"]) == float("-inf")


def test_certify_dispatches_to_dnn(capsys):
    code, out, _ = run(capsys, "certify", INSTANCES / "dnn_hand.json", "--no-meta")
    doc = json.loads(out)
    assert code == 0 and set(doc["statuses"]) == {f"{k}_hat" for k in "ABCDEF"}


def test_dnn_command_rejects_inequality_form(capsys):
    code, _, err = run(capsys, "dnn", INSTANCES / "ex41_alpha1.json")
    assert code == 2 and "nonneg_vars" in err


def test_strict_exit_on_inconclusive(capsys):
    # Example 4.3 without the known facts leaves C undecided
    args = ("certify", INSTANCES / "ex43.json", "--no-meta")
    code, out, _ = run(capsys, *args)
    assert code == 0 and "INCONCLUSIVE" in json.loads(out)["statuses"].values()
    assert run(capsys, *args, "--strict")[0] == 3


@pytest.mark.parametrize("argv", [
    ("certify", "missing.json"),
    ("certify", "BAD"),
    ("certify", INSTANCES / "ex41_alpha1.json", "--candidate", "1,2"),
    ("sweep", "--from", "1.0"),
    ("sweep", "--example", "4.2"),
    ("sweep", "--step", "0"),
])
def test_input_errors_exit_2(capsys, tmp_path, argv):
    if argv[1] == "BAD":
        bad = tmp_path / "bad.json"
        bad.write_text("{\"n\": 0}")
        argv = (argv[0], bad)
    assert run(capsys, *argv)[0] == 2


def test_bad_flag_is_a_usage_error(capsys):
    with pytest.raises(SystemExit) as e:
        main(["certify", str(INSTANCES / "ex41_alpha1.json"), "--tol", "-1"])
    assert e.value.code == 2


def test_solve_with_trace(capsys, tmp_path):
    trace = tmp_path / "t.csv"
    code, out, _ = run(capsys, "solve", INSTANCES / "ex41_alpha2.5.json", "--no-meta",
                       "--trace", trace, "--with-trace")
    doc = json.loads(out)
    assert code == 0 and doc["primal"]["status"] == "OPTIMAL"
    rows = list(csv.reader(trace.open()))
    assert rows[0] == ["iter", "mu", "primal_obj", "dual_obj", "pinf", "dinf"]
    assert len(rows) - 1 == len(doc["primal"]["trace"])


def test_solve_dnn_flavor(capsys):
    _, out, _ = run(capsys, "solve", INSTANCES / "dnn_hand.json", "--no-meta")
    assert json.loads(out)["flavor"] == "dnn"


def test_sweep_csv(capsys, tmp_path):
    path = tmp_path / "fig.csv"
    code, _, _ = run(capsys, "sweep", "--from", "2.4", "--to", "2.6", "--step", "0.1", "--csv", path)
    rows = list(csv.reader(path.open()))
    assert code == 0 and len(rows) == 4 and rows[0][0] == "alpha"


def test_examples_writes_corpus(capsys, tmp_path):
    assert run(capsys, "examples", "--out", tmp_path)[0] == 0
    written = sorted(p.name for p in tmp_path.iterdir())
    assert written == sorted(p.name for p in INSTANCES.iterdir())
    for name in written:
        assert (tmp_path / name).read_text() == (INSTANCES / name).read_text()


def test_report_encoding():
    assert jsonable({"a": float("nan"), "b": float("inf"), "c": -0.0}) == {"a": None, "b": "+inf", "c": 0.0}
    assert parse_float("+inf") == float("inf") and parse_float(None) != parse_float(None)
    assert dumps({"x": 1}).startswith("{")


@pytest.mark.skipif(shutil.which("qcqpcert") is None, reason="console script not installed")
def test_console_script():
    r = subprocess.run(["qcqpcert", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "certify" in r.stdout
    r = subprocess.run([sys.executable, "-m", "qcqpcert.cli", "solve",
                        str(INSTANCES / "ex41_alpha1.json"), "--no-meta"], capture_output=True, text=True)
    assert r.returncode == 0 and json.loads(r.stdout)["primal"]["status"] == "OPTIMAL"

"""CLI scenario runner: commands, reports, determinism, error handling."""

import json

import numpy as np
import pytest
from click.testing import CliRunner

from vtqw.cli import main
from vtqw.report import render_report


@pytest.fixture
def runner():
    return CliRunner()


def write(tmp_path, name, doc):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


TRIANGLE = {
    "vertices": ["a", "b", "c"],
    "edges": [{"u": "a", "v": "b", "w": 1.0},
              {"u": "b", "v": "c", "w": 1.0},
              {"u": "a", "v": "c", "w": 1.0}],
    "sigma": {"a": 1.0},
    "M": ["c"],
}

WALK_POSITIVE = {
    "kind": "walk",
    "graph": {"vertices": ["u", "v"],
              "edges": [{"u": "u", "v": "v", "w": 1.0}],
              "V0": ["u"], "V_M": ["v"], "M": ["v"], "sigma": {"u": 1.0}},
    "subroutine": {"T": 1, "inputs": {"0": {"halt_law": [[1, 1.0]],
                                            "answer": 1}}},
    "alpha": "const", "R": 2.0, "W": 2.0,
    "expected_decision": "positive",
}


def test_net_stats(runner, tmp_path):
    path = write(tmp_path, "tri.json", TRIANGLE)
    result = runner.invoke(main, ["net", "stats", path])
    assert result.exit_code == 0
    doc = json.loads(result.output)
    assert doc["W"] == 3.0
    assert doc["pi"]["a"] == pytest.approx(1.0 / 3.0)
    assert doc["commute_time"] == pytest.approx(4.0)
    assert "config" in doc


def test_net_stats_missing_file(runner):
    result = runner.invoke(main, ["net", "stats", "/nonexistent.json"])
    assert result.exit_code != 0
    assert "not found" in result.output


def test_malformed_json_reports_position(runner, tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{\"vertices\": [,]}")
    result = runner.invoke(main, ["net", "stats", str(path)])
    assert result.exit_code != 0
    assert "line" in result.output and "column" in result.output


def test_walk_run_positive(runner, tmp_path):
    path = write(tmp_path, "walk.json", WALK_POSITIVE)
    result = runner.invoke(main, ["walk", "run", path])
    assert result.exit_code == 0, result.output
    doc = json.loads(result.output)
    assert doc["decision"] == "positive"
    assert doc["conditions"]["P3_ok"]
    assert doc["witness_diagnostics"]["kind"] == "positive"


def test_walk_run_negative_with_witness(runner, tmp_path):
    scenario = json.loads(json.dumps(WALK_POSITIVE))
    scenario["graph"]["M"] = []
    scenario.pop("expected_decision")
    path = write(tmp_path, "walk0.json", scenario)
    result = runner.invoke(main, ["walk", "run", path])
    assert result.exit_code == 0, result.output
    doc = json.loads(result.output)
    assert doc["decision"] == "negative"
    assert doc["witness_diagnostics"]["kind"] == "negative"
    assert doc["witness_diagnostics"]["delta_prime"] <= 1e-10


def test_pe_decide(runner, tmp_path):
    instance = {
        "dimension": 2,
        "psi0": [[0.0, 0.0], [1.0, 0.0]],
        "psi_A": [[[1.0, 0.0], [0.0, 0.0]]],
        "psi_B": [],
        "c_minus": 1.0,
    }
    path = write(tmp_path, "inst.json", instance)
    result = runner.invoke(main, ["pe", "decide", path, "--mode", "spectral"])
    assert result.exit_code == 0, result.output
    doc = json.loads(result.output)
    assert doc["decision"] == "positive"
    assert doc["m_delta"] == pytest.approx(1.0)
    assert doc["phase_histogram"]


def test_search_compare_csv(runner, tmp_path):
    instance = {
        "n": 2,
        "pi": {"1": 0.5, "2": 0.5},
        "laws": {"1": [[2, 1.0]], "2": [[4, 1.0]]},
        "g": {"2": 1},
        "marked_sets": [[2], [1, 2]],
    }
    path = write(tmp_path, "search.json", instance)
    result = runner.invoke(main, ["search", "compare", path])
    assert result.exit_code == 0, result.output
    lines = result.output.strip().splitlines()
    assert lines[0] == "marked,expr1,expr2,expr3"
    assert len(lines) == 3
    first = lines[1].split(",")
    assert float(first[1]) == pytest.approx(np.sqrt(20.0))


def test_mnrs_verify(runner, tmp_path):
    scenario = {"kind": "mnrs", "graph": {k: v for k, v in TRIANGLE.items()
                                          if k in ("vertices", "edges")},
                "M": ["a"], "p": 0.5, "mc_runs": 2000}
    path = write(tmp_path, "mnrs.json", scenario)
    result = runner.invoke(main, ["mnrs", "verify", path, "--seed", "4"])
    assert result.exit_code == 0, result.output
    doc = json.loads(result.output)
    assert doc["inequality_margin"] >= -1e-9
    analytic = np.array(doc["departures_analytic"])
    mc = np.array(doc["departures_mc"])
    band = 3.0 * np.array(doc["departures_stderr"]) + 1e-9
    assert np.all(np.abs(analytic - mc) <= band)


def test_compose_decide(runner, tmp_path):
    from vtqw.outers import single_bit_outer
    outer = single_bit_outer()
    unitaries = []
    for op in outer.steps:
        if isinstance(op, str):
            unitaries.append("query")
        else:
            unitaries.append([[float(v.real), float(v.imag)]
                              for v in np.asarray(op).reshape(-1)])
    scenario = {
        "kind": "compose",
        "outer": {"n": 1, "Y": 1, "unitaries": unitaries, "eps_O": 0.0},
        "inner": {"T": 1, "inputs": {"0": {"halt_law": [[1, 1.0]],
                                           "answer": 1}}},
    }
    path = write(tmp_path, "compose.json", scenario)
    result = runner.invoke(main, ["compose", "decide", path])
    assert result.exit_code == 0, result.output
    doc = json.loads(result.output)
    assert doc["output"] == 1
    assert doc["parameters"]["error_condition_ok"]


def test_suite_run_pass_and_fail(runner, tmp_path):
    walk = write(tmp_path, "walk.json", WALK_POSITIVE)
    bad = json.loads(json.dumps(WALK_POSITIVE))
    bad["expected_decision"] = "negative"
    bad_path = write(tmp_path, "bad.json", bad)

    manifest = write(tmp_path, "suite.json", {"scenarios": ["walk.json"]})
    result = runner.invoke(main, ["suite", "run", manifest])
    assert result.exit_code == 0, result.output
    assert json.loads(result.output)["passed"]

    manifest2 = write(tmp_path, "suite2.json",
                      {"scenarios": ["walk.json", "bad.json"]})
    result2 = runner.invoke(main, ["suite", "run", manifest2])
    assert result2.exit_code == 1
    doc = json.loads(result2.output)
    assert not doc["passed"]
    assert doc["failures"] == 1


def test_suite_empty_manifest_warns(runner, tmp_path):
    manifest = write(tmp_path, "empty.json", {"scenarios": []})
    result = runner.invoke(main, ["suite", "run", manifest])
    assert result.exit_code == 0
    assert "empty manifest" in result.output


def test_reports_are_byte_deterministic(runner, tmp_path):
    path = write(tmp_path, "walk.json", WALK_POSITIVE)
    a = runner.invoke(main, ["walk", "run", path, "--seed", "3"]).output
    b = runner.invoke(main, ["walk", "run", path, "--seed", "3"]).output
    assert a == b


def test_render_report_float_format():
    text = render_report({"x": 1.0 / 3.0})
    assert "0.33333333333333331" in text

import json
import statistics
from pathlib import Path

import jsonschema
import pytest
from hypothesis import given, settings, strategies as st

from tabpar import bench, engine
from tabpar.bench import AnswerMismatch, Row

SCHEMA = json.loads((Path(__file__).parents[1] / "docs" / "bench.schema.json").read_text())


@pytest.fixture(scope="module")
def tc_report():
    rows = bench.run_query_suite("tc", bench.tc_inputs([40]), workers=[1, 2], merges=["link", "copy"],
                                 trials=3, tabled=True)
    return bench.make_report("tc", rows, {"sizes": [40]}, note="test")


def test_report_validates(tc_report):
    jsonschema.validate(tc_report, SCHEMA)
    assert {r["mode"] for r in tc_report["rows"]} == {"tabled", "serial", "parallel"}
    assert len(tc_report["rows"]) == 3 * 4


def test_pointsto_and_merge_reports_validate():
    rows = bench.run_query_suite("pointsto", bench.pointsto_inputs([200]), trials=1)
    jsonschema.validate(bench.make_report("pointsto", rows, {}), SCHEMA)
    rows = bench.run_merge_suite([10, 1000], trials=2)
    report = bench.make_report("merge", rows, {})
    jsonschema.validate(report, SCHEMA)
    assert {(r["merge_strategy"], r["input"]["size"]) for r in report["rows"]} == {
        ("link", 10), ("copy", 10), ("link", 1000), ("copy", 1000)}


def test_improvement_recomputable(tc_report):
    rows = tc_report["rows"]
    base = statistics.median(r["total_ms"] for r in rows if r["mode"] == "serial")
    for imp in tc_report["improvements"]:
        cand = statistics.median(r["total_ms"] for r in rows
                                 if r["mode"] == "parallel" and r["merge_strategy"] == imp["merge_strategy"])
        assert imp["baseline_median_ms"] == base
        assert imp["improvement_pct"] == pytest.approx(100 * (base - cand) / base)
    assert {i["merge_strategy"] for i in tc_report["improvements"]} == {"link", "copy"}


def test_csv(tc_report):
    lines = bench.to_csv(tc_report).splitlines()
    assert len(lines) == 1 + len(tc_report["rows"])


@settings(max_examples=100)
@given(st.floats(0.01, 1e4), st.floats(0.01, 1e4))
def test_improvement_formula(b, c):
    assert bench.improvement(b, c) == pytest.approx(100 * (b - c) / b)
    assert bench.improvement(0.0, c) == 0.0


def test_report_count_mismatch_aborts():
    inp = {"kind": "x"}
    rows = [Row("serial", 1, None, inp, 0, 5), Row("parallel", 2, "link", inp, 0, 6)]
    with pytest.raises(AnswerMismatch):
        bench.make_report("tc", rows, {})


def test_suite_set_mismatch_aborts(monkeypatch):
    real = engine.solve_parallel

    def wrong(program, query, config):
        res = real(program, query, config)
        t = engine.AnswerTable(2)
        t.insert((0, 0))
        res.answers = t.seal()
        return res

    monkeypatch.setattr(bench, "solve_parallel", wrong)
    with pytest.raises(AnswerMismatch):
        bench.run_query_suite("tc", bench.tc_inputs([20]), trials=1)


def test_time_merge_shapes():
    assert bench.time_merge("link", 10) >= 0
    med = bench.merge_medians([100, 10_000], trials=3)
    assert med[("copy", 10_000)] > med[("copy", 100)]


def test_machine_info():
    info = bench.machine_info("laptop")
    assert info["note"] == "laptop" and info["python"]

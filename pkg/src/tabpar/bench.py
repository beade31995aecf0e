"""Benchmark suites and the JSON/CSV report they produce.

Suites:
  tc        transitive closure from one bound node (complete graphs by default)
  pointsto  points-to set of one variable over synthetic Andersen facts
  merge     merge_link vs merge_copy in isolation, by child table size

In the query suites ``workers == 1`` is the single-threaded run of the same
claim-guarded evaluator (``solve_single``); ``workers >= 2`` runs
``solve_parallel`` once per merge strategy. Every configuration must agree on
the answers for an input before any timing is reported.
"""
from __future__ import annotations

import csv
import gc
import io
import os
import platform
import statistics
import time
from dataclasses import asdict, dataclass, field

from . import _kernels, gen
from .engine import EvalConfig, shipped_program, solve_parallel, solve_serial, solve_single
from .lang import parse_query
from .tables import AnswerTable, merge_copy, merge_link

SCHEMA_VERSION = 1
SUITES = ("tc", "pointsto", "merge")


class AnswerMismatch(RuntimeError):
    """Two configurations disagreed on the answers for one input."""


@dataclass
class Row:
    mode: str
    workers: int
    merge_strategy: str | None
    input: dict
    trial: int
    answer_count: int
    plan_ms: float = 0.0
    worker_ms: list = field(default_factory=list)
    merge_ms: float = 0.0
    total_ms: float = 0.0


def machine_info(note: str = "") -> dict:
    return {
        "note": note,
        "platform": platform.platform(),
        "python": platform.python_version(),
        "cpu_count": os.cpu_count(),
    }


def _input_key(d: dict) -> str:
    return ",".join(f"{k}={d[k]}" for k in sorted(d))


def _group_key(row: dict) -> tuple:
    return (_input_key(row["input"]), row["mode"], row["workers"], row["merge_strategy"])


def aggregate(rows: list) -> list:
    groups: dict = {}
    for r in rows:
        groups.setdefault(_group_key(r), []).append(r)
    out = []
    for (_, mode, workers, merge), rs in groups.items():
        totals = [r["total_ms"] for r in rs]
        out.append({
            "input": rs[0]["input"],
            "mode": mode,
            "workers": workers,
            "merge_strategy": merge,
            "trials": len(rs),
            "answer_count": rs[0]["answer_count"],
            "median_total_ms": statistics.median(totals),
            "mean_total_ms": statistics.fmean(totals),
            "min_total_ms": min(totals),
            "median_plan_ms": statistics.median(r["plan_ms"] for r in rs),
            "median_merge_ms": statistics.median(r["merge_ms"] for r in rs),
        })
    return out


def improvement(baseline: float, candidate: float) -> float:
    return 100.0 * (baseline - candidate) / baseline if baseline > 0 else 0.0


def improvements(aggs: list) -> list:
    """Each parallel configuration against the single-worker row of its input."""
    base = {_input_key(a["input"]): a for a in aggs if a["mode"] == "serial"}
    out = []
    for a in aggs:
        b = base.get(_input_key(a["input"]))
        if a["mode"] != "parallel" or b is None:
            continue
        out.append({
            "input": a["input"],
            "workers": a["workers"],
            "merge_strategy": a["merge_strategy"],
            "baseline_median_ms": b["median_total_ms"],
            "candidate_median_ms": a["median_total_ms"],
            "improvement_pct": improvement(b["median_total_ms"], a["median_total_ms"]),
            "improvement_pct_mean": improvement(b["mean_total_ms"], a["mean_total_ms"]),
        })
    return out


def make_report(suite: str, rows: list, config: dict, note: str = "") -> dict:
    rows = [asdict(r) if isinstance(r, Row) else r for r in rows]
    counts: dict = {}
    for r in rows:
        key = _input_key(r["input"])
        if counts.setdefault(key, r["answer_count"]) != r["answer_count"]:
            raise AnswerMismatch(f"answer counts differ on {key}: "
                                 f"{counts[key]} vs {r['answer_count']} ({r['mode']}, {r['workers']})")
    aggs = aggregate(rows)
    return {
        "schema_version": SCHEMA_VERSION,
        "suite": suite,
        "machine": machine_info(note),
        "config": config,
        "rows": rows,
        "aggregates": aggs,
        "improvements": improvements(aggs),
    }


def to_csv(report: dict) -> str:
    buf = io.StringIO()
    fields = ["mode", "workers", "merge_strategy", "input", "trial", "answer_count",
              "plan_ms", "worker_ms", "merge_ms", "total_ms"]
    w = csv.DictWriter(buf, fieldnames=fields)
    w.writeheader()
    for r in report["rows"]:
        r = dict(r)
        r["input"] = _input_key(r["input"])
        r["worker_ms"] = ";".join(f"{x:.3f}" for x in r["worker_ms"])
        w.writerow(r)
    return buf.getvalue()


# ------------------------------------------------------------ query suites

def _configs(workers: list, merges: list, tabled: bool):
    out = []
    if tabled:
        out.append(("tabled", 1, None))
    for k in workers:
        if k == 1:
            out.append(("serial", 1, None))
        else:
            out.extend(("parallel", k, m) for m in merges)
    return out


def _run_one(program, query, mode, k, merge, seed):
    if mode == "tabled":
        return solve_serial(program, query)
    if mode == "serial":
        return solve_single(program, query)
    return solve_parallel(program, query, EvalConfig(mode="parallel", workers=k,
                                                     merge_strategy=merge, seed=seed))


def run_query_suite(suite: str, inputs, workers=(1, 2), merges=("link",), trials: int = 5,
                    tabled: bool = False, seed: int = 0, warmup: int = 1) -> list:
    """Time each configuration on each ``(descriptor, program, query)`` input.

    Raises AnswerMismatch if two configurations return different answer sets.
    """
    _kernels.warm_up()
    configs = _configs(list(workers), list(merges), tabled)
    rows = []
    for desc, program, query in inputs:
        reference = None
        for mode, k, merge in configs:
            for _ in range(warmup):
                res = _run_one(program, query, mode, k, merge, seed)
            if warmup == 0:
                res = _run_one(program, query, mode, k, merge, seed)
            answers = res.answer_set()
            if reference is None:
                reference = (mode, k, merge, answers)
            elif answers != reference[3]:
                raise AnswerMismatch(
                    f"{suite} {_input_key(desc)}: {mode}/{k}/{merge} returned {len(answers)} answers, "
                    f"{reference[0]}/{reference[1]}/{reference[2]} returned {len(reference[3])}")
        for trial in range(trials):
            # rotate configuration order so drift does not favour one of them
            shift = trial % len(configs)
            for mode, k, merge in configs[shift:] + configs[:shift]:
                res = _run_one(program, query, mode, k, merge, seed + trial)
                s = res.stats
                rows.append(Row(mode, k, merge, desc, trial, s.answer_count, s.plan_ms,
                                list(s.worker_ms), s.merge_ms, s.total_ms))
    return rows


def tc_inputs(sizes, graph: str = "complete", flavor: str = "right", p: float = 0.05, seed: int = 0):
    prog = shipped_program("tc" if flavor == "right" else "tc_left")
    pred = "reachr" if flavor == "right" else "reachl"
    for n in sizes:
        facts = gen.generate(graph, n, p, seed)
        program = facts.program(prog)
        desc = dict(facts.descriptor, flavor=flavor)
        yield desc, program, parse_query(f"{pred}(n1,Y)", program)


def pointsto_inputs(sizes, seed: int = 0):
    prog = shipped_program("pointsto")
    for n in sizes:
        facts = gen.pointsto(n, seed)
        program = facts.program(prog)
        yield dict(facts.descriptor), program, parse_query("pt(v1,H)", program)


# -------------------------------------------------------------- merge suite

def time_merge(strategy: str, size: int) -> float:
    """Milliseconds for one merge of a sealed ``size``-tuple child into a parent."""
    parent = AnswerTable.from_prefix(0, [-1], name="parent")
    child = AnswerTable.from_prefix(0, range(size), name="child").seal()
    merge = merge_link if strategy == "link" else merge_copy
    enabled = gc.isenabled()
    gc.disable()
    try:
        t0 = time.perf_counter_ns()
        merge(parent, child)
        dt = time.perf_counter_ns() - t0
    finally:
        if enabled:
            gc.enable()
    if len(parent) != size + 1:
        raise AnswerMismatch(f"{strategy} merge of {size} tuples left {len(parent)} answers")
    return dt / 1e6


def run_merge_suite(sizes, merges=("link", "copy"), trials: int = 5) -> list:
    rows = []
    for size in sizes:
        for trial in range(trials):
            for m in merges:
                ms = time_merge(m, size)
                rows.append(Row("merge", 1, m, {"kind": "merge", "size": size}, trial,
                                size + 1, merge_ms=ms, total_ms=ms))
    return rows


def merge_medians(sizes, trials: int = 5) -> dict:
    """{(strategy, size): median ms}."""
    rows = run_merge_suite(sizes, trials=trials)
    out: dict = {}
    for r in rows:
        out.setdefault((r.merge_strategy, r.input["size"]), []).append(r.merge_ms)
    return {k: statistics.median(v) for k, v in out.items()}

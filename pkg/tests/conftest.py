import os
from collections import deque

import numpy as np
import pytest

from tabpar import gen
from tabpar.engine import shipped_program
from tabpar.lang import parse_query, program_from_facts

TC = {"right": ("tc", "reachr"), "left": ("tc_left", "reachl")}


def bfs_reach(edges, start):
    """Nodes reachable from ``start`` in one or more steps (brute force)."""
    adj = {}
    for a, b in edges:
        adj.setdefault(a, []).append(b)
    seen = set()
    todo = deque(adj.get(start, []))
    while todo:
        v = todo.popleft()
        if v in seen:
            continue
        seen.add(v)
        todo.extend(adj.get(v, []))
    return seen


def tc_program(edges, flavor="right", extra_names=()):
    prog, pred = TC[flavor]
    names = list(dict.fromkeys([x for e in edges for x in e] + list(extra_names)))
    program = program_from_facts({("edge", 2): [list(e) for e in edges]},
                                 shipped_program(prog), names)
    return program, pred


def tc_query(edges, start, flavor="right"):
    program, pred = tc_program(edges, flavor, extra_names=[start])
    return program, parse_query(f"{pred}({start},Y)", program)


def decode(program, rows):
    return {program.decode(t) for t in rows}


def random_edges(n, p, seed):
    facts = gen.random_graph(n, p, seed)
    return [(facts.names[a], facts.names[b]) for a, b in facts.relations["edge"].tolist()]


@pytest.fixture(scope="session")
def physical_cores():
    try:
        import psutil
        return psutil.cpu_count(logical=False) or 1
    except ImportError:  # pragma: no cover
        return os.cpu_count() or 1


# ---- acceptance reporting: one line per criterion in the terminal summary

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    number, title = mark.args
    detail = "; ".join(f"{k}={v}" for k, v in item.user_properties)
    if rep.when == "setup" and rep.skipped:
        _CRITERIA[number] = ("SKIP", title, str(rep.longrepr[-1]) if rep.longrepr else "")
    elif rep.when == "call":
        status = "PASS" if rep.passed else ("SKIP" if rep.skipped else "FAIL")
        if rep.skipped and rep.longrepr:
            detail = str(rep.longrepr[-1])
        _CRITERIA[number] = (status, title, detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        status, title, detail = _CRITERIA[number]
        line = f"[{status}] {number}. {title}"
        if detail:
            line += f" ({detail})"
        terminalreporter.write_line(line)

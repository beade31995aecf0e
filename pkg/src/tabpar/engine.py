"""Evaluators: naive bottom-up oracle, serial tabled top-down, parallel reachability.

The parallel evaluator handles programs that ``classify_shape`` recognises as
linear transitive closure over an EDB edge relation. It plans a frontier
split, runs one compiled worker per branch against a shared claim array, and
merges the per-worker answer tables into the parent table.
"""
from __future__ import annotations

import itertools
import operator
import random
import threading
import time
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources

import numpy as np
import pandas as pd

from . import _kernels
from ._kernels import ARRIVAL
from .lang import Program, Query, Var, parse_query, program_from_facts
from .pdg import NoSplit, classify_shape, plan_split
from .tables import MERGERS, AnswerTable, DisjointnessError


class ResourceError(RuntimeError):
    pass


class EvalError(RuntimeError):
    pass


MODES = ("serial", "parallel", "oracle")


@dataclass
class EvalConfig:
    mode: str = "serial"
    workers: int = 1
    merge_strategy: str = "link"
    dedup: bool | None = None       # None: off for parallel reachability, on elsewhere
    debug_disjoint: bool = False
    jitter: float = 0.0             # max random delay (s) before each worker starts
    seed: int | None = None
    max_facts: int = 20_000_000

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.merge_strategy not in MERGERS:
            raise ValueError(f"merge strategy must be link or copy, got {self.merge_strategy!r}")
        if self.mode == "parallel" and self.workers < 2:
            raise ValueError("parallel mode needs workers >= 2")


@dataclass
class Stats:
    plan_ms: float = 0.0
    worker_ms: list = field(default_factory=list)
    merge_ms: float = 0.0
    total_ms: float = 0.0
    answer_count: int = 0
    claims: int = 0
    answer_claims: int = 0
    workers: int = 0
    fallback: bool = False
    subgoals: int = 0

    def as_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class QueryResult:
    answers: AnswerTable
    stats: Stats
    program: Program | None = None
    child_sets: list = field(default_factory=list)  # filled when debug_disjoint is on
    subgoal_evals: Counter = field(default_factory=Counter)

    def answer_set(self) -> set:
        return self.answers.answer_set()

    def decoded(self) -> list:
        """Answers as constant texts, sorted."""
        return sorted(self.program.decode(t) for t in self.answers.iterate())


def _ms(t0: float) -> float:
    return (time.perf_counter() - t0) * 1000.0


# ------------------------------------------------------------- compiled rules

class _Rule:
    """Clause with numbered variables; each arg is (True, const id) or (False, slot)."""

    __slots__ = ("clause", "nvars", "head", "body", "preds", "project")

    def __init__(self, clause):
        slots: dict = {}

        def spec(atom):
            out = []
            for a in atom.args:
                if isinstance(a, Var):
                    out.append((False, slots.setdefault(a.name, len(slots))))
                else:
                    out.append((True, a.id))
            return tuple(out)

        self.clause = clause
        self.body = tuple(spec(b) for b in clause.body)
        self.head = spec(clause.head)
        self.preds = tuple(b.pred for b in clause.body)
        self.nvars = len(slots)
        self.project = _projector(self.head)


def _projector(spec):
    """env -> head tuple; itemgetter when the head is all distinct-slot variables."""
    if len(spec) >= 2 and not any(c for c, _ in spec):
        return operator.itemgetter(*(v for _, v in spec))
    return lambda env: _instantiate(spec, env)


def _bind(spec, row, env):
    """Unify an argument spec with a ground row under ``env``; new env or None."""
    new = None
    for (is_const, v), x in zip(spec, row):
        if is_const:
            if v != x:
                return None
            continue
        cur = env[v] if new is None else new[v]
        if cur is None:
            if new is None:
                new = list(env)
            new[v] = x
        elif cur != x:
            return None
    return env if new is None else new


def _instantiate(spec, env) -> tuple:
    return tuple(v if is_const else env[v] for is_const, v in spec)


def _rules(program: Program):
    cache = getattr(program, "_compiled_rules", None)
    if cache is None:
        cache = {}
        for c in program.rules:
            cache.setdefault(c.head.pred, []).append(_Rule(c))
        program._compiled_rules = cache
    return cache


# ------------------------------------------------------------------- oracle

def solve_oracle(program: Program, query: Query, max_facts: int = 20_000_000) -> set:
    """Least-model answers by naive bottom-up iteration.

    Every round re-derives all consequences of every rule from the full
    database (no semi-naive deltas, no top-down information passing). Rule
    bodies are joined set-at-a-time as dataframe merges on shared variables.
    """
    db = {p: pd.DataFrame(program.facts[p]) for p in program.edb}
    by_head = _rules(program)
    for p in by_head:
        db[p] = pd.DataFrame(np.empty((0, p[1]), dtype=np.int64))
    total = sum(len(f) for f in db.values())
    while True:
        new_db = dict(db)
        for p, rules in by_head.items():
            frames = [db[p]] + [_derive(r, db) for r in rules]
            new_db[p] = pd.concat(frames, ignore_index=True).drop_duplicates(ignore_index=True)
        new_total = sum(len(f) for f in new_db.values())
        if new_total > max_facts:
            raise ResourceError(f"oracle exceeded {max_facts} facts")
        if new_total == total:
            break
        db, total = new_db, new_total
    rows = db[query.pred].itertuples(index=False, name=None) if query.pred in db else ()
    return _select(rows, query)


def _derive(rule: _Rule, db) -> pd.DataFrame:
    cur = None
    for spec, pred in zip(rule.body, rule.preds):
        rel = db[pred]
        keep = {}
        for i, (is_const, v) in enumerate(spec):
            if is_const:
                rel = rel[rel[i] == v]
            elif v in keep:
                rel = rel[rel[i] == rel[keep[v]]]
            else:
                keep[v] = i
        lit = rel[list(keep.values())].set_axis([f"v{v}" for v in keep], axis=1)
        if cur is None:
            cur = lit
        else:
            shared = [c for c in lit.columns if c in cur.columns]
            cur = cur.merge(lit, on=shared) if shared else cur.merge(lit, how="cross")
        if cur.empty:
            return pd.DataFrame(np.empty((0, len(rule.head)), dtype=np.int64))
    if cur is None:  # ground fact of a rule-defined predicate
        cur = pd.DataFrame(index=[0])
    cols = {}
    for i, (is_const, v) in enumerate(rule.head):
        cols[i] = np.full(len(cur), v, dtype=np.int64) if is_const else cur[f"v{v}"].to_numpy(np.int64)
    return pd.DataFrame(cols, columns=range(len(rule.head)))


def _select(rows, query: Query) -> set:
    ids = query.bound_ids()
    var_pos: dict = {}
    out = set()
    for t in rows:
        ok = all(b is None or b == x for b, x in zip(ids, t))
        if ok:
            var_pos.clear()
            for a, x in zip(query.atom.args, t):
                if isinstance(a, Var) and not a.name.startswith("_G"):
                    if var_pos.setdefault(a.name, x) != x:
                        ok = False
                        break
        if ok:
            out.add(t)
    return out


# ------------------------------------------------------------ serial tabled

class _Subgoal:
    __slots__ = ("key", "table", "seen", "consumers", "complete")

    def __init__(self, key, arity):
        self.key = key
        self.table = AnswerTable(arity, name=str(key))
        self.seen: set = set()  # mirrors the table; cheap duplicate test on the hot path
        self.consumers: list = []
        self.complete = False


class TabledEvaluator:
    """Top-down evaluation with a subgoal table.

    Each distinct call (predicate plus bound arguments) gets one table and
    is evaluated once. A caller that consumes a tabled subgoal is registered
    on it and receives every answer exactly once, including answers produced
    later by recursion; evaluation ends at the fixpoint where the task stack
    is empty. All IDB predicates are tabled.
    """

    def __init__(self, program: Program, max_facts: int = 20_000_000):
        self.program = program
        self.rules = _rules(program)
        self.tables: dict = {}
        self.evals: Counter = Counter()
        self.max_facts = max_facts
        self._answers = 0
        self._tasks: list = []
        self._edb_cache: dict = {}

    def _edb_rows(self, pred, first):
        key = (pred, first)
        rows = self._edb_cache.get(key)
        if rows is None:
            if first is None:
                rows = list(map(tuple, self.program.facts[pred].tolist()))
            else:
                rows = list(map(tuple, self.program.lookup(pred, first).tolist()))
            self._edb_cache[key] = rows
        return rows

    def call(self, pred, bound: tuple) -> _Subgoal:
        key = (pred, bound)
        sg = self.tables.get(key)
        if sg is not None:
            return sg
        sg = _Subgoal(key, pred[1])
        self.tables[key] = sg
        self.evals[key] += 1
        for r in self.rules.get(pred, ()):
            env = _bind_call(r.head, bound, [None] * r.nvars)
            if env is not None:
                self._tasks.append((sg, r, 0, env))
        return sg

    def _add_answer(self, sg: _Subgoal, t: tuple) -> None:
        if t in sg.seen:
            return
        sg.seen.add(t)
        sg.table._put(t)
        self._answers += 1
        if self._answers > self.max_facts:
            raise ResourceError(f"tabled evaluation exceeded {self.max_facts} answers")
        push = self._tasks.append
        for owner, r, i, env in sg.consumers:
            e = _bind(r.body[i], t, env)
            if e is None:
                continue
            if i + 1 == len(r.body):
                # last literal: drop answers the owner already has without a task round trip
                h = r.project(e)
                if h in owner.seen:
                    continue
            push((owner, r, i + 1, e))

    def run(self) -> None:
        tasks = self._tasks
        program = self.program
        while tasks:
            sg, r, i, env = tasks.pop()
            if i == len(r.body):
                self._add_answer(sg, r.project(env))
                continue
            spec = r.body[i]
            pred = r.preds[i]
            if pred in program.edb:
                c0, v0 = spec[0]
                first = v0 if c0 else env[v0]
                for row in self._edb_rows(pred, first):
                    e = _bind(spec, row, env)
                    if e is not None:
                        tasks.append((sg, r, i + 1, e))
                continue
            bound = tuple(v if c else env[v] for c, v in spec)
            callee = self.call(pred, bound)
            callee.consumers.append((sg, r, i, env))
            for t in callee.table.head.trie.log:
                e = _bind(spec, t, env)
                if e is not None:
                    tasks.append((sg, r, i + 1, e))
        for sg in self.tables.values():
            sg.complete = True
            sg.table.seal()


def _bind_call(head_spec, bound, env):
    if None not in bound:
        return _bind(head_spec, bound, env)
    row_spec = [s for s, b in zip(head_spec, bound) if b is not None]
    return _bind(row_spec, [b for b in bound if b is not None], env)


def solve_serial(program: Program, query: Query, config: EvalConfig | None = None) -> QueryResult:
    config = config or EvalConfig()
    t0 = time.perf_counter()
    pred = query.pred
    bound = query.bound_ids()
    evals: Counter = Counter()
    if pred in program.edb:
        table = AnswerTable(pred[1], name=str(query))
        first = bound[0]
        rows = program.facts[pred] if first is None else program.lookup(pred, first)
        for t in sorted(_select(map(tuple, rows.tolist()), query)):
            table.insert(t)
        table.seal()
        n_sub = 0
    else:
        ev = TabledEvaluator(program, config.max_facts)
        sg = ev.call(pred, bound)
        ev.run()
        table = sg.table
        evals = ev.evals
        n_sub = len(ev.tables)
    if config.dedup is not None:
        table.dedup = config.dedup
    stats = Stats(total_ms=_ms(t0), answer_count=len(table), subgoals=n_sub)
    return QueryResult(table, stats, program, subgoal_evals=evals)


# ---------------------------------------------------------------- parallel

def _graph(program: Program, pred):
    """CSR arrays (indptr, successor ids) for a binary EDB relation."""
    cache = program.__dict__.setdefault("_csr", {})
    g = cache.get(pred)
    if g is None:
        idx = program.fact_index[pred]
        g = (idx.indptr, np.ascontiguousarray(idx.rows[:, 1]))
        cache[pred] = g
    return g


class _Worker(threading.Thread):
    def __init__(self, i, run):
        super().__init__(name=f"worker-{i}", daemon=True)
        self.index = i
        self._run = run
        self.table = None
        self.n_answers = 0
        self.claims = 0
        self.elapsed_ms = 0.0
        self.error: BaseException | None = None

    def run(self):
        try:
            self.table, self.claims, self.elapsed_ms = self._run()
            self.n_answers = len(self.table)
        except BaseException as e:  # re-raised by the parent after join
            self.error = e


def _explore(shape, program, roots, node_flags, ans_flags, start, name):
    mode = shape.mode
    sp, si = _graph(program, shape.step)
    bp, bi = _graph(program, shape.base) if mode != ARRIVAL else (sp, si)
    n = len(program.symbols)
    answers = np.empty(n + 1, dtype=np.int64)
    stack = np.empty(n + 1, dtype=np.int64)
    cursor = np.empty(n + 1, dtype=np.int64)
    n_ans, n_claims = _kernels.explore(mode, sp, si, bp, bi, np.ascontiguousarray(roots, dtype=np.int64),
                                       node_flags, ans_flags, answers, stack, cursor)
    table = AnswerTable.from_prefix(start, answers[:n_ans].tolist(), name=name)
    return table.seal(), int(n_claims)


def _claim_arrays(program, shape):
    n = len(program.symbols)
    # slot n stands for the start subgoal in arrival mode
    node_flags = np.zeros(n + 1, dtype=np.uint8)
    ans_flags = node_flags if shape.mode == ARRIVAL else np.zeros(n, dtype=np.uint8)
    return node_flags, ans_flags


def _reach_shape(program, query):
    shape = classify_shape(program, query)
    if not shape.parallelizable:
        raise ValueError(f"{query} is not a linear reachability query; use serial mode")
    return shape


def solve_single(program: Program, query: Query, config: EvalConfig | None = None) -> QueryResult:
    """The reachability evaluator run start-to-finish in the calling thread.

    Same claim-guarded traversal as the parallel workers, without planning,
    threads or merging: the single-threaded baseline for speedup numbers.
    """
    config = config or EvalConfig()
    shape = _reach_shape(program, query)
    t0 = time.perf_counter()
    start = query.atom.args[0].id
    node_flags, ans_flags = _claim_arrays(program, shape)
    if start < 0:
        table = AnswerTable(2, dedup=False, name="parent").seal()
        claims = 0
    elif shape.mode == ARRIVAL:
        node_flags[-1] = 1
        roots = program.fact_index[shape.base].successors(start)
        table, claims = _explore(shape, program, roots, node_flags, ans_flags, start, "parent")
        claims += 1
    else:
        table, claims = _explore(shape, program, [start], node_flags, ans_flags, start, "parent")
    w = _ms(t0)
    stats = Stats(worker_ms=[w], total_ms=w, answer_count=len(table), claims=claims,
                  answer_claims=len(table), workers=1)
    return QueryResult(table, stats, program)


def solve_parallel(program: Program, query: Query, config: EvalConfig) -> QueryResult:
    """Plan a frontier split, run claim-guarded workers, join all, merge."""
    if config.mode != "parallel":
        raise ValueError("solve_parallel needs config.mode == 'parallel'")
    shape = _reach_shape(program, query)
    t_total = time.perf_counter()
    start = query.atom.args[0].id
    t0 = time.perf_counter()
    plan = plan_split(program, query, config.workers, shape) if start >= 0 else \
        NoSplit("start constant not in program")
    plan_ms = _ms(t0)
    if isinstance(plan, NoSplit):
        res = solve_serial(program, query, EvalConfig(max_facts=config.max_facts))
        res.stats.fallback = True
        res.stats.plan_ms = plan_ms
        res.stats.total_ms = _ms(t_total)
        return res

    node_flags, ans_flags = _claim_arrays(program, shape)
    dedup = False if config.dedup is None else config.dedup
    parent = AnswerTable(2, dedup=dedup, name="parent")
    visited = np.asarray(plan.visited, dtype=np.int64)
    claims = _kernels.claim_many(node_flags, visited)
    if shape.mode == ARRIVAL:
        claims += _kernels.claim_one(node_flags, len(node_flags) - 1)
    pre = sorted(plan.pre_answers)
    answer_claims = _kernels.claim_many(ans_flags, np.array([h for _, h in pre], dtype=np.int64)) \
        if shape.mode != ARRIVAL else len(pre)
    for t in pre:
        parent.insert(t)
    plan_ms = _ms(t0)

    rng = random.Random(config.seed)
    delays = [rng.uniform(0, config.jitter) if config.jitter else 0.0 for _ in plan.branches]

    def job(i, branch):
        def run():
            if delays[i]:
                time.sleep(delays[i])
            t = time.perf_counter()
            table, n = _explore(shape, program, branch, node_flags, ans_flags, start, f"worker-{i}")
            return table, n, _ms(t)
        return run

    workers = [_Worker(i, job(i, b)) for i, b in enumerate(plan.branches)]
    for w in workers:
        w.start()
    for w in workers:
        w.join()
    for w in workers:
        if w.error is not None:
            raise EvalError(f"{w.name} failed: {w.error!r}") from w.error

    children = [w.table for w in workers]
    child_sets = []
    if config.debug_disjoint:
        child_sets = [c.answer_set() for c in children]
        parent_set = parent.answer_set()
        for (i, a), (j, b) in itertools.combinations(enumerate(child_sets), 2):
            if a & b:
                raise DisjointnessError(f"worker-{i} and worker-{j} share {sorted(a & b)[:3]}")
        for i, a in enumerate(child_sets):
            if a & parent_set:
                raise DisjointnessError(f"worker-{i} overlaps the parent's planning answers")

    t0 = time.perf_counter()
    merge = MERGERS[config.merge_strategy]
    for c in children:
        merge(parent, c)
    parent.seal()
    merge_ms = _ms(t0)

    stats = Stats(
        plan_ms=plan_ms,
        worker_ms=[w.elapsed_ms for w in workers],
        merge_ms=merge_ms,
        total_ms=_ms(t_total),
        answer_count=len(parent),
        claims=int(claims) + sum(w.claims for w in workers),
        answer_claims=int(answer_claims) + sum(w.n_answers for w in workers),
        workers=len(workers),
    )
    return QueryResult(parent, stats, program, child_sets=child_sets)


def solve(program: Program, query: Query, config: EvalConfig | None = None) -> QueryResult:
    config = config or EvalConfig()
    if config.mode == "parallel":
        return solve_parallel(program, query, config)
    if config.mode == "oracle":
        t0 = time.perf_counter()
        answers = solve_oracle(program, query, config.max_facts)
        table = AnswerTable(query.pred[1], name=str(query))
        for t in sorted(answers):
            table.insert(t)
        table.seal()
        return QueryResult(table, Stats(total_ms=_ms(t0), answer_count=len(table)), program)
    return solve_serial(program, query, config)


# --------------------------------------------------------------- programs

def shipped_program(name: str) -> str:
    """Text of a bundled program: ``tc``, ``tc_left`` or ``pointsto``."""
    return resources.files("tabpar.programs").joinpath(f"{name}.dl").read_text()


def pointsto_program(facts) -> Program:
    """Points-to rules over ``{"alloc": rows, "assign": rows}`` of constant texts.

    Rows may also be integer arrays, in which case ``facts["names"]`` maps ids
    to constant texts.
    """
    names = facts.get("names", ())
    return program_from_facts({("alloc", 2): facts["alloc"], ("assign", 2): facts["assign"]},
                              shipped_program("pointsto"), names)


def run_pointsto(facts, variable: str, config: EvalConfig | None = None,
                 program: Program | None = None) -> QueryResult:
    """Andersen-style points-to set of ``variable`` (query ``pt(variable,H)``)."""
    program = program or pointsto_program(facts)
    query = parse_query(f"pt({variable},H)", program)
    return solve(program, query, config)

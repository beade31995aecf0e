"""Predicate dependency graph, reachability-shape matching and frontier split."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .lang import Atom, Clause, Pred, Program, Query, Var, pred_str
from ._kernels import ARRIVAL, BASE


@dataclass(frozen=True)
class PredicateDependencyGraph:
    nodes: tuple
    edges: tuple  # (head predicate, body predicate)
    cyclic: frozenset

    def successors(self, p: Pred) -> list:
        return [q for a, q in self.edges if a == p]

    def is_recursive(self, p: Pred) -> bool:
        return p in self.cyclic


def build_pdg(program: Program) -> PredicateDependencyGraph:
    nodes = program.predicates
    edges: dict = {}
    for c in program.rules:
        for b in c.body:
            edges.setdefault((c.head.pred, b.pred))
    adj: dict = {p: [] for p in nodes}
    for a, b in edges:
        adj[a].append(b)
    cyclic = set()
    for comp in _sccs(nodes, adj):
        if len(comp) > 1 or comp[0] in adj[comp[0]]:
            cyclic.update(comp)
    return PredicateDependencyGraph(tuple(nodes), tuple(edges), frozenset(cyclic))


def _sccs(nodes, adj):
    """Tarjan's algorithm, iterative."""
    index, low, on_stack = {}, {}, set()
    stack, out = [], []
    counter = 0
    for root in nodes:
        if root in index:
            continue
        work = [(root, iter(adj[root]))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(adj[w])))
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            else:
                work.pop()
                if work:
                    u = work[-1][0]
                    low[u] = min(low[u], low[v])
                if low[v] == index[v]:
                    comp = []
                    while True:
                        w = stack.pop()
                        on_stack.discard(w)
                        comp.append(w)
                        if w == v:
                            break
                    out.append(comp)
    return out


# ------------------------------------------------------------------- shapes

class Shape(enum.Enum):
    RIGHT_LINEAR = "right_linear"
    LEFT_LINEAR = "left_linear"
    NOT_REACHABILITY = "not_reachability"


@dataclass(frozen=True)
class ReachabilityShape:
    kind: Shape
    recursive: Pred | None = None
    step: Pred | None = None
    base: Pred | None = None

    @property
    def parallelizable(self) -> bool:
        return self.kind is not Shape.NOT_REACHABILITY

    @property
    def mode(self) -> int:
        """Kernel mode: whether claimed nodes or base successors are answers."""
        if self.kind is Shape.RIGHT_LINEAR and self.base != self.step:
            return BASE
        return ARRIVAL


_NOT = ReachabilityShape(Shape.NOT_REACHABILITY)


def _vars(atom: Atom):
    if not all(isinstance(a, Var) for a in atom.args):
        return None
    return tuple(a.name for a in atom.args)


def _match_base(c: Clause, r: Pred, edb) -> Pred | None:
    if len(c.body) != 1:
        return None
    h, b = _vars(c.head), _vars(c.body[0])
    if h is None or b is None or len(set(h)) != 2 or h != b:
        return None
    p = c.body[0].pred
    return p if p in edb and p[1] == 2 and p != r else None


def _match_step(c: Clause, r: Pred, edb):
    if len(c.body) != 2:
        return None
    h = _vars(c.head)
    l1, l2 = (_vars(a) for a in c.body)
    if h is None or l1 is None or l2 is None:
        return None
    x, y = h
    p1, p2 = c.body[0].pred, c.body[1].pred
    if len({x, y}) != 2:
        return None
    # r(X,Y) :- e(X,Z), r(Z,Y).
    if p2 == r and p1 in edb and p1[1] == 2:
        if l1[0] == x and l2[1] == y and l1[1] == l2[0] and l1[1] not in (x, y):
            return Shape.RIGHT_LINEAR, p1
    # r(X,Y) :- r(X,Z), e(Z,Y).
    if p1 == r and p2 in edb and p2[1] == 2:
        if l1[0] == x and l2[1] == y and l1[1] == l2[0] and l1[1] not in (x, y):
            return Shape.LEFT_LINEAR, p2
    return None


def classify_shape(program: Program, query: Query) -> ReachabilityShape:
    r = query.pred
    if r not in program.tabled or r[1] != 2 or query.mask != (True, False):
        return _NOT
    rules = program.rules_for(r)
    if len(rules) != 2:
        return _NOT
    for base_c, step_c in (rules, rules[::-1]):
        base = _match_base(base_c, r, program.edb)
        step = _match_step(step_c, r, program.edb)
        if base and step:
            return ReachabilityShape(step[0], r, step[1], base)
    return _NOT


# ----------------------------------------------------------------- planning

@dataclass(frozen=True)
class ParallelPlan:
    start: int
    branches: tuple          # tuple of tuples of constant ids, one per worker
    pre_claimed: frozenset   # constants expanded by the planner (start included)
    pre_answers: frozenset   # (start, answer) tuples found while planning
    visited: tuple           # nodes claimed by the planner, in visit order
    shape: ReachabilityShape = field(compare=False)

    @property
    def workers(self) -> int:
        return len(self.branches)

    def to_json(self, program: Program) -> dict:
        name = program.name
        return {
            "start": name(self.start),
            "shape": self.shape.kind.value,
            "step": pred_str(self.shape.step),
            "base": pred_str(self.shape.base),
            "branches": [[name(c) for c in b] for b in self.branches],
            "pre_claimed": sorted(name(c) for c in self.pre_claimed),
            "pre_answers": sorted([name(a), name(b)] for a, b in self.pre_answers),
        }


@dataclass(frozen=True)
class NoSplit:
    """Planning found no fan-out of two or more: evaluate serially."""
    reason: str
    reachable: int = 0

    def to_json(self, program: Program | None = None) -> dict:
        return {"split": False, "reason": self.reason, "reachable": self.reachable}


def plan_split(program: Program, query: Query, workers: int,
               shape: ReachabilityShape | None = None) -> ParallelPlan | NoSplit:
    """Breadth-first expansion from the bound start until the frontier fans out.

    Stops at the first frontier of at least ``workers`` unvisited successors.
    If the reachable set runs out first, falls back to the widest frontier
    seen with two or more successors (one branch each), else ``NoSplit``.
    """
    if workers < 2:
        raise ValueError("plan_split needs workers >= 2")
    shape = shape or classify_shape(program, query)
    if not shape.parallelizable:
        raise ValueError(f"{query} is not a reachability query")
    start = query.atom.args[0].id
    step = program.fact_index[shape.step]
    base = program.fact_index[shape.base]
    arrival = shape.mode == ARRIVAL

    visited: list[int] = []
    seen: set[int] = set()
    if arrival:
        frontier = _unvisited(base.successors(start).tolist(), seen)
    else:
        visited.append(start)
        seen.add(start)
        frontier = _unvisited(step.successors(start).tolist(), seen)

    snapshots = []  # (frontier size, visited prefix length, frontier)
    while frontier:
        if len(frontier) >= workers:
            return _make_plan(program, shape, start, visited, frontier, workers)
        if len(frontier) >= 2:
            snapshots.append((len(frontier), len(visited), frontier))
        visited.extend(frontier)
        seen.update(frontier)
        nxt: dict[int, None] = {}
        for v in frontier:
            for z in step.successors(v).tolist():
                if z not in seen:
                    nxt.setdefault(z)
        frontier = sorted(nxt)
    if not snapshots:
        return NoSplit("reachable set exhausted before a fan-out of 2", len(visited))
    best = max(snapshots, key=lambda s: s[0])  # max() keeps the earliest tie
    _, n_visited, frontier = best
    return _make_plan(program, shape, start, visited[:n_visited], frontier, workers)


def _unvisited(succ, seen) -> list[int]:
    return sorted({z for z in succ if z not in seen})


def _make_plan(program, shape, start, visited, frontier, workers) -> ParallelPlan:
    k = min(workers, len(frontier))
    branches = tuple(tuple(frontier[i::k]) for i in range(k))
    if shape.mode == ARRIVAL:
        pre_answers = frozenset((start, v) for v in visited)
    else:
        base = program.fact_index[shape.base]
        pre_answers = frozenset((start, h) for v in visited for h in base.successors(v).tolist())
    return ParallelPlan(start, branches, frozenset(visited) | {start}, pre_answers,
                        tuple(visited), shape)

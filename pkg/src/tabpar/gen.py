"""Seeded input generators: edge graphs and synthetic points-to facts.

Generators return integer fact arrays plus a constant-name list so large
inputs can be loaded without a text round trip; ``to_text`` renders the
same facts in program syntax.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lang import Program, program_from_facts

KINDS = ("complete", "chain", "random", "pointsto")


@dataclass
class Facts:
    names: list           # constant texts, indexed by id
    relations: dict       # predicate name -> (m, 2) int array of ids
    descriptor: dict

    def to_text(self) -> str:
        out = []
        for rel, rows in self.relations.items():
            names = self.names
            out.extend(f"{rel}({names[a]},{names[b]})." for a, b in rows.tolist())
        return "\n".join(out) + ("\n" if out else "")

    def count(self) -> int:
        return sum(len(r) for r in self.relations.values())

    def program(self, rules_text: str) -> Program:
        return program_from_facts({(k, 2): v for k, v in self.relations.items()}, rules_text,
                                  self.names)


def _nodes(n: int) -> list:
    return [f"n{i}" for i in range(1, n + 1)]


def _check_n(n: int) -> None:
    if n < 1:
        raise ValueError(f"node count must be >= 1, got {n}")


def complete(n: int) -> Facts:
    """All n(n-1) ordered pairs, no self-loops."""
    _check_n(n)
    src, dst = np.nonzero(~np.eye(n, dtype=bool))
    edges = np.stack([src, dst], axis=1).astype(np.int64)
    return Facts(_nodes(n), {"edge": edges}, {"kind": "complete", "n": n})


def chain(n: int) -> Facts:
    _check_n(n)
    a = np.arange(n - 1, dtype=np.int64)
    return Facts(_nodes(n), {"edge": np.stack([a, a + 1], axis=1)}, {"kind": "chain", "n": n})


def random_graph(n: int, p: float, seed: int = 0) -> Facts:
    """Each ordered pair (i != j) is an edge with probability p."""
    _check_n(n)
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"edge probability must be in [0, 1], got {p}")
    rng = np.random.default_rng(seed)
    mask = rng.random((n, n)) < p
    np.fill_diagonal(mask, False)
    src, dst = np.nonzero(mask)
    edges = np.stack([src, dst], axis=1).astype(np.int64)
    return Facts(_nodes(n), {"edge": edges}, {"kind": "random", "n": n, "p": p, "seed": seed})


def pointsto(n: int, seed: int = 0, heaps: int | None = None, extra: int = 4) -> Facts:
    """Synthetic Andersen input over variables v1..vn and heap objects h1..hm.

    ``assign(V,W)`` (V receives W's points-to set) forms a random tree rooted
    at v1, so every variable flows into v1, plus ``extra * n`` random
    assignments that add cycles and sharing. Each heap object is allocated
    into one random variable; m defaults to n // 4.
    """
    _check_n(n)
    m = max(1, n // 4) if heaps is None else heaps
    rng = np.random.default_rng(seed)
    child = np.arange(1, n, dtype=np.int64)
    parent = (rng.random(n - 1) * child).astype(np.int64)
    tree = np.stack([parent, child], axis=1)
    more = rng.integers(0, n, size=(extra * n, 2), dtype=np.int64)
    more = more[more[:, 0] != more[:, 1]]
    assign = np.unique(np.vstack([tree, more]), axis=0)
    owners = rng.integers(0, n, size=m, dtype=np.int64)
    alloc = np.stack([owners, np.arange(n, n + m, dtype=np.int64)], axis=1)
    names = [f"v{i}" for i in range(1, n + 1)] + [f"h{j}" for j in range(1, m + 1)]
    return Facts(names, {"alloc": alloc, "assign": assign},
                 {"kind": "pointsto", "n": n, "heaps": m, "seed": seed})


def generate(kind: str, n: int, p: float = 0.05, seed: int = 0) -> Facts:
    if kind == "complete":
        return complete(n)
    if kind == "chain":
        return chain(n)
    if kind == "random":
        return random_graph(n, p, seed)
    if kind == "pointsto":
        return pointsto(n, seed)
    raise ValueError(f"unknown generator {kind!r}; expected one of {KINDS}")

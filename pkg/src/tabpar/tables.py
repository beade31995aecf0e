"""Answer tables built from linked trie segments, plus claim sets.

A table is a chain of segments. While a table is open, inserts go to its
first segment; merging another (sealed) table either relinks the chain ends
(``merge_link``, constant work) or re-inserts every tuple (``merge_copy``).
"""
from __future__ import annotations

import enum
import threading
from typing import Hashable, Iterable, Iterator

import numpy as np

from . import _kernels


class StateError(RuntimeError):
    pass


class ArityError(ValueError):
    pass


class DisjointnessError(AssertionError):
    pass


class TableState(enum.Enum):
    OPEN = "open"
    SEALED = "sealed"
    CONSUMED = "consumed"


class Claim(enum.Enum):
    CLAIMED = "claimed"
    ALREADY_CLAIMED = "already_claimed"

    def __bool__(self) -> bool:
        return self is Claim.CLAIMED


class AnswerTrie:
    """Prefix tree over integer tuples of fixed arity.

    Inner levels are dicts keyed by constant id, the last level a set.
    ``log`` keeps first-insertion order for iteration.
    """

    __slots__ = ("arity", "root", "log")

    def __init__(self, arity: int):
        if arity < 1:
            raise ArityError("arity must be >= 1")
        self.arity = arity
        self.root = set() if arity == 1 else {}
        self.log: list[tuple] = []

    def _leaf(self, t, create: bool):
        node = self.root
        last = self.arity - 1
        for depth in range(last):
            nxt = node.get(t[depth])
            if nxt is None:
                if not create:
                    return None
                nxt = set() if depth == last - 1 else {}
                node[t[depth]] = nxt
            node = nxt
        return node

    def insert(self, t: tuple) -> bool:
        if self.arity == 2:
            leaf = self.root.get(t[0])
            if leaf is None:
                leaf = self.root[t[0]] = set()
        elif self.arity == 1:
            leaf = self.root
        else:
            leaf = self._leaf(t, True)
        k = t[-1]
        if k in leaf:
            return False
        leaf.add(k)
        self.log.append(t)
        return True

    def __contains__(self, t) -> bool:
        leaf = self._leaf(t, False)
        return leaf is not None and t[-1] in leaf

    def __len__(self) -> int:
        return len(self.log)

    def __iter__(self) -> Iterator[tuple]:
        return iter(self.log)


class Segment:
    __slots__ = ("trie", "next")

    def __init__(self, arity: int):
        self.trie = AnswerTrie(arity)
        self.next: Segment | None = None


class AnswerTable:
    """Chain of trie segments with an Open/Sealed/Consumed lifecycle.

    ``dedup`` is the default for iteration: on, a tuple already seen in an
    earlier segment is skipped; off, segments are trusted to be disjoint.
    """

    def __init__(self, arity: int, dedup: bool = True, name: str = ""):
        self.arity = arity
        self.dedup = dedup
        self.name = name
        self.head: Segment | None = Segment(arity)
        self.tail: Segment | None = self.head
        self.total_count = 0
        self.n_segments = 1
        self.state = TableState.OPEN

    def __repr__(self) -> str:
        return (f"AnswerTable({self.name or '?'}, arity={self.arity}, count={self.total_count}, "
                f"segments={self.n_segments}, {self.state.value})")

    @classmethod
    def from_prefix(cls, prefix: int, values, dedup: bool = False, name: str = "") -> "AnswerTable":
        """Open binary table holding ``(prefix, v)`` for each distinct v, in order."""
        table = cls(2, dedup=dedup, name=name)
        vals = list(dict.fromkeys(values))
        if vals:
            trie = table.head.trie
            trie.root[prefix] = set(vals)
            trie.log = [(prefix, v) for v in vals]
            table.total_count = len(vals)
        return table

    def _check_arity(self, t) -> None:
        if len(t) != self.arity:
            raise ArityError(f"tuple {t!r} has arity {len(t)}, table has {self.arity}")

    def _live(self) -> None:
        if self.state is TableState.CONSUMED:
            raise StateError(f"{self!r} was merged into another table")

    def segments(self) -> Iterator[Segment]:
        self._live()
        seg = self.head
        while seg is not None:
            yield seg
            seg = seg.next

    def insert(self, t: tuple) -> bool:
        """Add ``t``; False if it was already present in any segment."""
        if self.state is not TableState.OPEN:
            raise StateError(f"insert into {self.state.value} table {self.name!r}")
        self._check_arity(t)
        return self._put(t)

    def _put(self, t: tuple) -> bool:
        if self.n_segments > 1:
            seg = self.head.next
            while seg is not None:
                if t in seg.trie:
                    return False
                seg = seg.next
        if self.head.trie.insert(t):
            self.total_count += 1
            return True
        return False

    def insert_many(self, rows: Iterable[tuple]) -> int:
        return sum(self.insert(t) for t in rows)

    def __contains__(self, t) -> bool:
        return any(t in seg.trie for seg in self.segments())

    def __len__(self) -> int:
        self._live()
        return self.total_count

    def seal(self) -> "AnswerTable":
        self._live()
        self.state = TableState.SEALED
        return self

    def iterate(self, dedup: bool | None = None) -> Iterator[tuple]:
        """Tuples in chain order, each segment in insertion order."""
        if dedup is None:
            dedup = self.dedup
        segs = list(self.segments())
        if not dedup or len(segs) == 1:
            for seg in segs:
                yield from seg.trie.log
            return
        for i, seg in enumerate(segs):
            earlier = [s.trie for s in segs[:i]]
            for t in seg.trie.log:
                if not any(t in e for e in earlier):
                    yield t

    def __iter__(self) -> Iterator[tuple]:
        return self.iterate()

    def answer_set(self) -> set:
        return set(self.iterate(dedup=False))


def _check_merge(parent: AnswerTable, child: AnswerTable) -> None:
    if parent is child:
        raise StateError("cannot merge a table into itself")
    child._live()
    parent._live()
    if child.state is not TableState.SEALED:
        raise StateError(f"child {child.name!r} must be sealed before merging")
    if parent.arity != child.arity:
        raise ArityError(f"arity mismatch: parent {parent.arity}, child {child.arity}")


def assert_disjoint(parent: AnswerTable, child: AnswerTable) -> None:
    for seg in child.segments():
        for t in seg.trie.log:
            if t in parent:
                raise DisjointnessError(f"{t!r} in both {parent.name!r} and {child.name!r}")


def merge_link(parent: AnswerTable, child: AnswerTable, check_disjoint: bool = False) -> AnswerTable:
    """Append ``child``'s segment chain after ``parent``'s in O(1).

    The caller vouches that the tables are disjoint; ``check_disjoint``
    verifies it at O(child) cost.
    """
    _check_merge(parent, child)
    if check_disjoint:
        assert_disjoint(parent, child)
    parent.tail.next = child.head
    parent.tail = child.tail
    parent.total_count += child.total_count
    parent.n_segments += child.n_segments
    child.head = child.tail = None
    child.state = TableState.CONSUMED
    return parent


def merge_copy(parent: AnswerTable, child: AnswerTable, check_disjoint: bool = False) -> AnswerTable:
    """Re-insert every child tuple into the parent's first segment."""
    _check_merge(parent, child)
    if check_disjoint:
        assert_disjoint(parent, child)
    put = parent._put
    for seg in child.segments():
        for t in seg.trie.log:
            put(t)
    child.head = child.tail = None
    child.state = TableState.CONSUMED
    return parent


MERGERS = {"link": merge_link, "copy": merge_copy}


# ---------------------------------------------------------------- claim sets

class ClaimSet:
    """Set of claimed keys with first-claim-wins semantics.

    Keys are any hashable (e.g. ground subgoal fingerprints). Sharded by key
    hash, one lock per shard.
    """

    def __init__(self, shards: int = 64):
        self._shards = [set() for _ in range(shards)]
        self._locks = [threading.Lock() for _ in range(shards)]

    def try_claim(self, key: Hashable) -> Claim:
        i = hash(key) % len(self._shards)
        shard = self._shards[i]
        with self._locks[i]:
            if key in shard:
                return Claim.ALREADY_CLAIMED
            shard.add(key)
        return Claim.CLAIMED

    def __contains__(self, key) -> bool:
        return key in self._shards[hash(key) % len(self._shards)]

    def __len__(self) -> int:
        return sum(len(s) for s in self._shards)


class AtomicClaimSet:
    """Claim set over dense integer keys ``0 <= k < capacity``.

    One byte per key, claimed with an atomic exchange; the same flag array is
    handed to the compiled workers, so Python callers and workers share one
    linearizable claim space.
    """

    def __init__(self, capacity: int):
        self.flags = np.zeros(capacity, dtype=np.uint8)

    @property
    def capacity(self) -> int:
        return len(self.flags)

    def try_claim(self, key: int) -> Claim:
        if _kernels.claim_one(self.flags, key):
            return Claim.CLAIMED
        return Claim.ALREADY_CLAIMED

    def claim_all(self, keys) -> int:
        """Claim each key; returns how many were newly claimed."""
        return int(_kernels.claim_many(self.flags, np.asarray(keys, dtype=np.int64)))

    def __contains__(self, key: int) -> bool:
        return bool(self.flags[key])

    def __len__(self) -> int:
        return int(np.count_nonzero(self.flags))

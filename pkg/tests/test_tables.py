import threading

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tabpar.tables import (AnswerTable, AnswerTrie, ArityError, AtomicClaimSet, Claim, ClaimSet,
                           DisjointnessError, StateError, TableState, merge_copy, merge_link)

A, B, C, D = 0, 1, 2, 3


def sealed(rows, arity=2, name="child"):
    t = AnswerTable(arity, name=name)
    t.insert_many(rows)
    return t.seal()


def test_insert_and_duplicate():
    t = AnswerTable(2)
    assert t.insert((A, B)) is True
    assert len(t) == 1
    assert t.insert((A, B)) is False
    assert len(t) == 1 and (A, B) in t


def test_insert_thousand_vs_reference():
    rng = np.random.default_rng(0)
    t = AnswerTable(3)
    ref = set()
    while len(ref) < 1000:
        row = tuple(int(x) for x in rng.integers(0, 20, size=3))
        assert t.insert(row) == (row not in ref)
        ref.add(row)
    assert len(t) == 1000
    assert set(t.iterate()) == ref
    assert len(list(t.iterate())) == 1000


def test_insert_errors():
    t = AnswerTable(2)
    with pytest.raises(ArityError):
        t.insert((A,))
    t.seal()
    with pytest.raises(StateError):
        t.insert((A, B))
    with pytest.raises(ArityError):
        AnswerTrie(0)


def test_trie_log_order():
    trie = AnswerTrie(1)
    for x in (3, 1, 3, 2):
        trie.insert((x,))
    assert list(trie) == [(3,), (1,), (2,)]
    assert len(trie) == 3 and (1,) in trie and (4,) not in trie


@pytest.mark.parametrize("merge", [merge_link, merge_copy])
def test_merge_two(merge):
    parent = AnswerTable(2, name="parent")
    parent.insert((A, B))
    child = sealed([(A, C)])
    merge(parent, child)
    assert list(parent) == [(A, B), (A, C)]
    assert len(parent) == 2
    assert child.state is TableState.CONSUMED


@pytest.mark.parametrize("merge", [merge_link, merge_copy])
def test_merge_empty(merge):
    parent = AnswerTable(2)
    merge(parent, sealed([]))
    assert len(parent) == 0 and list(parent) == []


@pytest.mark.parametrize("merge", [merge_link, merge_copy])
def test_merge_four_children(merge):
    parent = AnswerTable(2, dedup=False)
    parent.insert((A, 0))
    union = {(A, 0)}
    start = 1
    for i, n in enumerate((3, 1, 7, 4)):
        rows = [(A, start + j) for j in range(n)]
        start += n
        union |= set(rows)
        merge(parent, sealed(rows, name=f"c{i}"))
    assert len(parent) == 1 + 3 + 1 + 7 + 4
    assert set(parent) == union
    assert len(list(parent)) == len(union)


def test_link_segments_chain_in_order():
    parent = AnswerTable(2)
    parent.insert_many([(A, B), (A, C)])
    child = sealed([(B, A), (B, B), (B, C)])
    merge_link(parent, child)
    assert parent.n_segments == 2
    assert list(parent) == [(A, B), (A, C), (B, A), (B, B), (B, C)]
    # the parent stays writable and still rejects tuples held by linked segments
    assert parent.insert((B, A)) is False
    assert parent.insert((D, D)) is True
    assert len(parent) == 6


def test_merge_errors():
    parent = AnswerTable(2)
    child = sealed([(A, B)])
    merge_link(parent, child)
    for merge in (merge_link, merge_copy):
        with pytest.raises(StateError):
            merge(parent, child)
        with pytest.raises(StateError):
            merge(parent, parent)
    with pytest.raises(StateError):
        merge_link(parent, AnswerTable(2))  # child not sealed
    with pytest.raises(ArityError):
        merge_link(parent, sealed([(A,)], arity=1))
    with pytest.raises(StateError):
        list(child.iterate())
    with pytest.raises(StateError):
        len(child)


def test_check_disjoint():
    parent = AnswerTable(2)
    parent.insert((A, B))
    with pytest.raises(DisjointnessError):
        merge_link(parent, sealed([(A, B)]), check_disjoint=True)


def test_iterate_dedup():
    parent = AnswerTable(2, dedup=False)
    parent.insert((A, B))
    merge_link(parent, sealed([(A, B), (A, C)]))  # contract broken on purpose
    assert list(parent.iterate(dedup=True)) == [(A, B), (A, C)]
    assert list(parent.iterate(dedup=False)) == [(A, B), (A, B), (A, C)]


def test_from_prefix():
    t = AnswerTable.from_prefix(A, [C, B, C])
    assert list(t) == [(A, C), (A, B)]
    assert t.insert((A, B)) is False and t.insert((A, D)) is True


rows2 = st.lists(st.tuples(st.integers(0, 8), st.integers(0, 8)), max_size=40)


@settings(max_examples=150, deadline=None)
@given(rows2, rows2)
def test_strategies_equivalent(prow, crow):
    crow = [r for r in crow if r not in set(prow)]
    results = []
    for merge in (merge_link, merge_copy):
        parent = AnswerTable(2)
        parent.insert_many(prow)
        merge(parent, sealed(crow))
        results.append((set(parent), len(parent)))
    assert results[0] == results[1]
    assert results[0][0] == set(prow) | set(crow)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.sets(st.integers(0, 50), max_size=10), min_size=1, max_size=5))
def test_disjoint_iteration_exact(parts):
    seen = set()
    chunks = []
    for p in parts:
        chunks.append([(A, x) for x in sorted(p - seen)])
        seen |= p
    parent = AnswerTable(2, dedup=False)
    parent.insert_many(chunks[0])
    for ch in chunks[1:]:
        merge_link(parent, sealed(ch))
    flat = [t for ch in chunks for t in ch]
    assert list(parent.iterate(dedup=False)) == flat
    assert list(parent.iterate(dedup=True)) == flat


# ---------------------------------------------------------------- claim sets

@pytest.mark.parametrize("factory", [lambda: ClaimSet(), lambda: AtomicClaimSet(16)])
def test_claim_basic(factory):
    cs = factory()
    assert cs.try_claim(B) is Claim.CLAIMED
    assert cs.try_claim(B) is Claim.ALREADY_CLAIMED
    assert not cs.try_claim(B)
    assert B in cs and C not in cs and len(cs) == 1


def test_claim_set_subgoal_keys():
    cs = ClaimSet(shards=4)
    key = ("reachr", 2, (7,))
    assert cs.try_claim(key)
    assert not cs.try_claim(("reachr", 2, (7,)))


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(0, 30), max_size=60))
def test_claim_sequential_is_a_set(keys):
    for cs in (ClaimSet(shards=3), AtomicClaimSet(31)):
        ref = set()
        for k in keys:
            assert bool(cs.try_claim(k)) == (k not in ref)
            ref.add(k)
        assert len(cs) == len(ref)


def test_atomic_claim_all():
    cs = AtomicClaimSet(10)
    assert cs.claim_all([1, 2, 2, 3]) == 3
    assert cs.claim_all([3, 4]) == 1
    assert len(cs) == 4


def test_claim_set_threads():
    cs = ClaimSet()
    wins = [0] * 4

    def work(i):
        for k in range(2000):
            if cs.try_claim(k):
                wins[i] += 1

    threads = [threading.Thread(target=work, args=(i,)) for i in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert sum(wins) == 2000 == len(cs)

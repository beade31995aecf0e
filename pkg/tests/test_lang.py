import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tabpar.engine import shipped_program
from tabpar.lang import (Const, ParseError, ValidationError, Var, format_program, parse_program,
                         parse_query, program_from_facts)

TC_TEXT = """:- table reachr/2.
reachr(X,Y):- edge(X,Y).
reachr(X,Y):- edge(X,Z), reachr(Z,Y).
"""


def test_single_fact():
    p = parse_program("edge(a,b).")
    assert p.edb == {("edge", 2)}
    assert p.fact_count() == 1
    assert not p.rules


def test_program_one():
    p = parse_program(TC_TEXT, extensional=[("edge", 2)])
    assert len(p.rules) == 2
    assert p.tabled == {("reachr", 2)}
    assert p.idb == {("reachr", 2)}
    assert str(p.rules[1]) == "reachr(X,Y) :- edge(X,Z), reachr(Z,Y)."


def test_non_ground_fact():
    with pytest.raises(ValidationError):
        parse_program("p(X).")


def test_unsafe_rule():
    with pytest.raises(ValidationError, match="unsafe"):
        parse_program("q(a). p(X,Y) :- q(X).")


def test_arity_conflict():
    with pytest.raises(ValidationError, match="arity"):
        parse_program("q(a). q(a,b).")
    with pytest.raises(ValidationError):
        parse_program("q(a). p(X) :- q(X,X).")


def test_undefined_body_predicate():
    with pytest.raises(ValidationError, match="undefined"):
        parse_program(TC_TEXT)


@pytest.mark.parametrize("text,line,col", [
    ("edge(a,b)", 1, 10),
    ("edge(a,b).\nedge(a b).", 2, 8),
    ("edge(a,#).", 1, 8),
    (":- tabled p/1.", 1, 4),
])
def test_parse_error_positions(text, line, col):
    with pytest.raises(ParseError) as exc:
        parse_program(text)
    assert (exc.value.line, exc.value.column) == (line, col)


def test_comments_and_whitespace():
    p = parse_program("% header\nedge( a ,\n b ). % trailing\n edge(b,c).")
    assert p.fact_count() == 2


def test_integer_constants_share_id_space():
    p = parse_program("e(1,a). e(a,007).")
    assert p.const("7").id == p.symbols.get("7")
    assert set(p.symbols.names) == {"1", "a", "7"}
    # interning order is first occurrence
    assert p.symbols.names == ["1", "a", "7"]


def test_duplicate_facts_collapse():
    p = parse_program("e(a,b). e(a,b).")
    assert p.fact_count() == 1


def test_anonymous_variables_are_distinct():
    p = parse_program("e(a,b). p(X) :- e(X,_), e(_,X).")
    body = p.rules[0].body
    assert body[0].args[1] != body[1].args[0]


def test_query_patterns():
    p = parse_program(shipped_program("tc") + "edge(a,b).")
    q = parse_query("reachr(a,Y)", p)
    assert q.mask == (True, False) and q.pattern == "bf"
    assert q.atom.args[0] == Const("a") and q.atom.args[0].id == p.symbols.get("a")
    assert parse_query("edge(X,Y)", p).mask == (False, False)
    assert parse_query("reachr(zz,Y).", p).atom.args[0].id == -1


def test_query_errors():
    p = parse_program(shipped_program("tc") + "edge(a,b).")
    with pytest.raises(ValidationError, match="arity"):
        parse_query("reachr(a,b,c)", p)
    with pytest.raises(ValidationError, match="unknown"):
        parse_query("nope(a,Y)", p)
    with pytest.raises(ValidationError, match="distinct"):
        parse_query("reachr(X,X)", p)
    with pytest.raises(ParseError):
        parse_query("reachr(a,Y) extra", p)


def test_bulk_facts_match_text():
    rows = [("a", "b"), ("b", "c"), ("a", "c")]
    bulk = program_from_facts({("edge", 2): rows}, shipped_program("tc"))
    text = parse_program(shipped_program("tc") + " ".join(f"edge({a},{b})." for a, b in rows))
    assert bulk == text
    names = ["a", "b", "c"]
    arr = program_from_facts({("edge", 2): np.array([[0, 1], [1, 2], [0, 2]])},
                             shipped_program("tc"), names)
    assert arr == text


def test_bulk_and_rules_conflict():
    with pytest.raises(ValidationError):
        program_from_facts({("reachr", 2): [("a", "b")]}, shipped_program("tc") + "edge(a,b).")


# ---------------------------------------------------------------- properties

PREDS = [("p", 1), ("q", 2), ("r", 2), ("s", 3)]
CONSTS = ["a", "b", "c", "d", "0", "17"]
VARS = ["X", "Y", "Z", "W"]


@st.composite
def programs(draw):
    lines = []
    for name, arity in PREDS[:2]:
        for _ in range(draw(st.integers(1, 4))):
            args = draw(st.lists(st.sampled_from(CONSTS), min_size=arity, max_size=arity))
            lines.append(f"{name}({','.join(args)}).")
    for name, arity in PREDS[2:]:
        for _ in range(draw(st.integers(0, 2))):
            body = []
            for _ in range(draw(st.integers(1, 3))):
                bn, ba = draw(st.sampled_from(PREDS[:2]))
                args = draw(st.lists(st.sampled_from(VARS + CONSTS[:2]), min_size=ba, max_size=ba))
                body.append(f"{bn}({','.join(args)})")
            body_vars = sorted({a for b in body for a in b[2:-1].split(",") if a in VARS})
            if not body_vars:
                continue
            head = draw(st.lists(st.sampled_from(body_vars + ["c"]), min_size=arity, max_size=arity))
            lines.append(f"{name}({','.join(head)}) :- {', '.join(body)}.")
    if draw(st.booleans()):
        lines.insert(0, ":- table r/2.")
    order = draw(st.permutations(lines))
    return "\n".join(order)


@settings(max_examples=150, deadline=None)
@given(programs())
def test_round_trip(text):
    p = parse_program(text)
    again = parse_program(format_program(p))
    assert again == p
    assert format_program(again) == format_program(p)


@settings(max_examples=100, deadline=None)
@given(programs())
def test_interning_injective(text):
    p = parse_program(text)
    consts = [a for c in p.clauses for atom in (c.head, *c.body) for a in atom.args
              if isinstance(a, Const)]
    for c1 in consts:
        for c2 in consts:
            assert (c1.id == c2.id) == (c1.name == c2.name)
    assert all(not isinstance(a, Var) for c in p.clauses if c.is_fact for a in c.head.args)


@settings(max_examples=100, deadline=None)
@given(programs())
def test_fact_index_matches_scan(text):
    p = parse_program(text)
    for pred in p.edb:
        facts = p.facts[pred].tolist()
        assert sum(len(p.fact_index[pred].lookup(k)) for k in range(len(p.symbols))) == len(facts)
        for k in range(len(p.symbols)):
            expected = sorted(f for f in facts if f[0] == k)
            assert sorted(p.lookup(pred, k).tolist()) == expected

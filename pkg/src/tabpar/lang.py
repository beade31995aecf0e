"""Datalog terms, programs, parser and fact store.

Programs are definite Datalog: no function symbols, no negation. Constants
(symbolic and integer) share one interned id space; ids are assigned in order
of first occurrence. Facts live in columnar integer arrays, indexed on their
first argument.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

import numpy as np

Pred = tuple  # (name, arity)


class ParseError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{line}:{column}: {message}")
        self.line = line
        self.column = column


class ValidationError(ValueError):
    pass


class SymbolTable:
    """Injective text <-> id map; ids are dense and follow first interning."""

    def __init__(self, names: Iterable[str] = ()):
        self._ids: dict[str, int] = {}
        self._names: list[str] = []
        for n in names:
            self.intern(n)

    def intern(self, text: str) -> int:
        i = self._ids.get(text)
        if i is None:
            i = len(self._names)
            self._ids[text] = i
            self._names.append(text)
        return i

    def get(self, text: str, default: int = -1) -> int:
        return self._ids.get(text, default)

    def name(self, i: int) -> str:
        return self._names[i]

    @property
    def names(self) -> list[str]:
        return self._names

    def __len__(self) -> int:
        return len(self._names)

    def __contains__(self, text: str) -> bool:
        return text in self._ids


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Const:
    name: str
    id: int = field(default=-1, compare=False)

    def __str__(self) -> str:
        return self.name


Term = Var | Const


@dataclass(frozen=True)
class Atom:
    name: str
    args: tuple

    @property
    def pred(self) -> Pred:
        return (self.name, len(self.args))

    @property
    def arity(self) -> int:
        return len(self.args)

    def variables(self) -> list[Var]:
        return [a for a in self.args if isinstance(a, Var)]

    def is_ground(self) -> bool:
        return all(isinstance(a, Const) for a in self.args)

    def __str__(self) -> str:
        return f"{self.name}({','.join(str(a) for a in self.args)})"


@dataclass(frozen=True)
class Clause:
    head: Atom
    body: tuple = ()

    @property
    def is_fact(self) -> bool:
        return not self.body

    def __str__(self) -> str:
        if not self.body:
            return f"{self.head}."
        return f"{self.head} :- {', '.join(str(b) for b in self.body)}."


def pred_str(p: Pred) -> str:
    return f"{p[0]}/{p[1]}"


# ---------------------------------------------------------------- fact store

class FactIndex:
    """First-argument index over one EDB relation.

    ``rows`` holds the facts sorted by first argument; facts with first
    argument ``k`` are ``rows[indptr[k]:indptr[k + 1]]``.
    """

    def __init__(self, rows: np.ndarray, n_symbols: int):
        order = np.argsort(rows[:, 0], kind="stable") if len(rows) else np.empty(0, np.int64)
        self.rows = rows[order]
        counts = np.bincount(self.rows[:, 0], minlength=n_symbols) if len(rows) else np.zeros(n_symbols, np.int64)
        self.indptr = np.zeros(n_symbols + 1, dtype=np.int64)
        np.cumsum(counts, out=self.indptr[1:])

    def lookup(self, key: int) -> np.ndarray:
        if key < 0 or key + 1 >= len(self.indptr):
            return self.rows[:0]
        return self.rows[self.indptr[key]:self.indptr[key + 1]]

    def successors(self, key: int) -> np.ndarray:
        """Second column of ``lookup(key)``; binary relations only."""
        return self.lookup(key)[:, 1]

    def __len__(self) -> int:
        return len(self.rows)


class Program:
    """A validated, immutable Datalog program.

    ``rules`` holds every clause with a body plus facts of predicates that
    also have rules; pure fact predicates (the EDB) are stored columnar in
    ``facts`` and indexed in ``fact_index``.
    """

    def __init__(self, rules, facts, tabled, symbols: SymbolTable, extensional=()):
        self.rules: tuple[Clause, ...] = tuple(rules)
        self.symbols = symbols
        self.tabled: frozenset = frozenset(tabled)
        n = len(symbols)
        self.facts: dict[Pred, np.ndarray] = {}
        for p, rows in facts.items():
            arr = np.asarray(rows, dtype=np.int64).reshape(-1, p[1])
            if len(arr):
                arr = np.unique(arr, axis=0)
            self.facts[p] = arr
        for p in extensional:
            self.facts.setdefault(p, np.empty((0, p[1]), dtype=np.int64))
        self.idb: frozenset = frozenset(c.head.pred for c in self.rules)
        self.edb: frozenset = frozenset(self.facts) - self.idb
        self.fact_index: dict[Pred, FactIndex] = {p: FactIndex(self.facts[p], n) for p in self.edb}
        self._rules_by_pred: dict[Pred, list[Clause]] = {}
        for c in self.rules:
            self._rules_by_pred.setdefault(c.head.pred, []).append(c)
        self._validate()

    # -- queries on the model

    @property
    def predicates(self) -> list[Pred]:
        seen: dict[Pred, None] = {}
        for c in self.rules:
            seen.setdefault(c.head.pred)
            for b in c.body:
                seen.setdefault(b.pred)
        for p in self.facts:
            seen.setdefault(p)
        for p in sorted(self.tabled):
            seen.setdefault(p)
        return list(seen)

    def rules_for(self, pred: Pred) -> list[Clause]:
        return self._rules_by_pred.get(pred, [])

    def lookup(self, pred: Pred, key: int) -> np.ndarray:
        return self.fact_index[pred].lookup(key)

    def fact_count(self) -> int:
        return sum(len(a) for a in self.facts.values())

    @property
    def clauses(self) -> Iterator[Clause]:
        """Rules followed by EDB facts rendered as ground clauses."""
        yield from self.rules
        name = self.symbols.name
        for p in sorted(self.edb):
            for row in self.facts[p].tolist():
                yield Clause(Atom(p[0], tuple(Const(name(i), i) for i in row)))

    def const(self, text: str) -> Const:
        return Const(text, self.symbols.get(text))

    def name(self, i: int) -> str:
        return self.symbols.name(i)

    def decode(self, row: Iterable[int]) -> tuple[str, ...]:
        return tuple(self.symbols.name(i) for i in row)

    def structure(self):
        """Id-free view used for structural equality."""
        facts = {p: frozenset(self.decode(r) for r in self.facts[p].tolist()) for p in self.edb}
        return (self.tabled, frozenset(str(c) for c in self.rules), facts,
                frozenset(p for p in self.edb if not len(self.facts[p])))

    def __eq__(self, other) -> bool:
        return isinstance(other, Program) and self.structure() == other.structure()

    def __hash__(self):
        return id(self)

    # -- validation

    def _validate(self) -> None:
        arities: dict[str, int] = {}

        def see(name, arity, where):
            if arity < 1:
                raise ValidationError(f"{where}: predicate {name} needs arity >= 1")
            prev = arities.setdefault(name, arity)
            if prev != arity:
                raise ValidationError(f"{where}: {name} used with arity {arity} and {prev}")

        for p, rows in self.facts.items():
            see(p[0], p[1], f"facts of {pred_str(p)}")
            if p in self.idb and len(rows):
                raise ValidationError(f"{pred_str(p)} has both bulk facts and rules")
        for p in sorted(self.tabled):
            see(p[0], p[1], f"table directive {pred_str(p)}")
        for c in self.rules:
            see(c.head.name, c.head.arity, str(c))
            for b in c.body:
                see(b.name, b.arity, str(c))
            if c.is_fact:
                if not c.head.is_ground():
                    raise ValidationError(f"non-ground fact: {c}")
                continue
            body_vars = {v for b in c.body for v in b.variables()}
            unsafe = [v for v in c.head.variables() if v not in body_vars]
            if unsafe:
                raise ValidationError(f"unsafe variable {unsafe[0]} in {c}")
            for b in c.body:
                if b.pred not in self.idb and b.pred not in self.facts:
                    raise ValidationError(f"undefined predicate {pred_str(b.pred)} in {c}")


# -------------------------------------------------------------------- parser

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r\n]+|%[^\n]*)
  | (?P<neck>:-)
  | (?P<int>-?\d+)
  | (?P<name>[a-z][A-Za-z0-9_]*)
  | (?P<var>[A-Z_][A-Za-z0-9_]*)
  | (?P<punct>[(),./])
""", re.VERBOSE)


def _tokenize(text: str):
    pos, line, line_start = 0, 1, 0
    out = []
    n = len(text)
    while pos < n:
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        val = m.group()
        if kind == "ws":
            nl = val.count("\n")
            if nl:
                line += nl
                line_start = m.start() + val.rfind("\n") + 1
        else:
            if kind == "punct":
                kind = val
            out.append((kind, val, line, m.start() - line_start + 1))
        pos = m.end()
    out.append(("eof", "", line, pos - line_start + 1))
    return out


class _Parser:
    def __init__(self, text: str, symbols: SymbolTable):
        self.toks = _tokenize(text)
        self.i = 0
        self.symbols = symbols
        self._anon = 0

    def peek(self):
        return self.toks[self.i]

    def take(self, kind: str):
        tok = self.toks[self.i]
        if tok[0] != kind:
            what = tok[1] or "end of input"
            raise ParseError(f"expected {kind!r}, found {what!r}", tok[2], tok[3])
        self.i += 1
        return tok

    def term(self):
        kind, val, line, col = self.peek()
        if kind == "var":
            self.i += 1
            if val == "_":
                self._anon += 1
                return Var(f"_G{self._anon}")
            return Var(val)
        if kind == "name":
            self.i += 1
            return Const(val, self.symbols.intern(val))
        if kind == "int":
            self.i += 1
            text = str(int(val))
            return Const(text, self.symbols.intern(text))
        raise ParseError(f"expected a term, found {val or 'end of input'!r}", line, col)

    def atom(self) -> Atom:
        name = self.take("name")[1]
        self.take("(")
        args = [self.term()]
        while self.peek()[0] == ",":
            self.i += 1
            args.append(self.term())
        self.take(")")
        return Atom(name, tuple(args))

    def program(self):
        tabled, clauses = [], []
        while self.peek()[0] != "eof":
            if self.peek()[0] == "neck":
                self.i += 1
                kw = self.take("name")
                if kw[1] != "table":
                    raise ParseError(f"unknown directive {kw[1]!r}", kw[2], kw[3])
                name = self.take("name")[1]
                self.take("/")
                arity = int(self.take("int")[1])
                self.take(".")
                tabled.append((name, arity))
                continue
            line = self.peek()[2]
            head = self.atom()
            body = []
            if self.peek()[0] == "neck":
                self.i += 1
                body.append(self.atom())
                while self.peek()[0] == ",":
                    self.i += 1
                    body.append(self.atom())
            self.take(".")
            clauses.append((Clause(head, tuple(body)), line))
        return tabled, clauses


def parse_program(text: str, extensional: Iterable[Pred] = ()) -> Program:
    """Parse and validate program text.

    ``extensional`` declares EDB predicates that may have no facts (a body
    literal over an undeclared, undefined predicate is a validation error).
    """
    symbols = SymbolTable()
    tabled, clauses = _Parser(text, symbols).program()
    rule_preds = {c.head.pred for c, _ in clauses if c.body}
    rules, facts = [], {}
    for c, line in clauses:
        if c.body:
            rules.append(c)
            continue
        if not c.head.is_ground():
            raise ValidationError(f"line {line}: non-ground fact: {c}")
        if c.head.pred in rule_preds:
            rules.append(c)
        else:
            facts.setdefault(c.head.pred, []).append([a.id for a in c.head.args])
    return Program(rules, facts, tabled, symbols, extensional)


def program_from_facts(facts: Mapping[Pred, Iterable], rules_text: str = "",
                       names: Iterable[str] = ()) -> Program:
    """Build a program from rule text plus bulk facts.

    ``facts`` maps a predicate to rows of constant texts, or to an integer
    array whose entries index ``names``. Avoids the text round trip for large
    generated inputs. Every predicate in ``facts`` is declared extensional.
    """
    symbols = SymbolTable()
    tabled, clauses = _Parser(rules_text, symbols).program()
    names = list(names)
    remap = np.fromiter((symbols.intern(n) for n in names), dtype=np.int64, count=len(names))
    rows_by_pred = {}
    for p, rows in facts.items():
        if isinstance(rows, np.ndarray):
            if not names:
                raise ValueError("integer fact arrays need a names list")
            rows_by_pred[p] = remap[rows.reshape(-1, p[1])]
        else:
            rows_by_pred[p] = np.array([[symbols.intern(str(t)) for t in r] for r in rows],
                                       dtype=np.int64).reshape(-1, p[1])
    rules = []
    for c, line in clauses:
        if not c.body and not c.head.is_ground():
            raise ValidationError(f"line {line}: non-ground fact: {c}")
        rules.append(c)
    return Program(rules, rows_by_pred, tabled, symbols, extensional=rows_by_pred)


def format_program(program: Program) -> str:
    lines = [f":- table {p[0]}/{p[1]}." for p in sorted(program.tabled)]
    lines += [str(c) for c in program.rules]
    for p in sorted(program.edb):
        # sorted by name so the text does not depend on interning order
        rows = sorted(program.decode(r) for r in program.facts[p].tolist())
        lines += [f"{p[0]}({','.join(r)})." for r in rows]
    return "\n".join(lines) + "\n"


# -------------------------------------------------------------------- queries

@dataclass(frozen=True)
class Query:
    atom: Atom
    mask: tuple  # True where the argument is bound

    @property
    def pred(self) -> Pred:
        return self.atom.pred

    @property
    def pattern(self) -> str:
        return "".join("b" if m else "f" for m in self.mask)

    def bound_ids(self) -> tuple:
        return tuple(a.id if isinstance(a, Const) else None for a in self.atom.args)

    def __str__(self) -> str:
        return str(self.atom)


def parse_query(text: str, program: Program | None = None) -> Query:
    """Parse ``p(a,Y)``; a trailing period is optional.

    With a program, the predicate must exist with matching arity and
    constants are resolved against the program's symbol table (unknown
    constants get id -1 and match nothing).
    """
    text = text.strip()
    if text.endswith("."):
        text = text[:-1]
    p = _Parser(text, SymbolTable())
    atom = p.atom()
    tok = p.peek()
    if tok[0] != "eof":
        raise ParseError(f"unexpected {tok[1]!r} after query", tok[2], tok[3])
    names = [v.name for v in atom.variables() if not v.name.startswith("_G")]
    if len(names) != len(set(names)):
        raise ValidationError(f"query variables must be distinct: {atom}")
    if program is not None:
        by_name = {p[0]: p for p in program.predicates}
        known = by_name.get(atom.name)
        if known is None:
            raise ValidationError(f"unknown predicate {atom.name}")
        if known[1] != atom.arity:
            raise ValidationError(f"{atom.name} has arity {known[1]}, query uses {atom.arity}")
        atom = Atom(atom.name, tuple(program.const(a.name) if isinstance(a, Const) else a
                                     for a in atom.args))
    return Query(atom, tuple(isinstance(a, Const) for a in atom.args))

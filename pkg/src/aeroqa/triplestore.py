"""In-memory triple store with a parser and executor for a SPARQL subset.

The store holds (subject, predicate, object) triples over IRIs and
literals and answers three query shapes over a basic graph pattern of up
to four triple patterns: ASK, SELECT DISTINCT ?v, and
SELECT (COUNT(DISTINCT ?v) AS ?c).  Joins are index-nested-loop with
patterns processed left to right; result order is the order of first
derivation, which makes every query deterministic for golden tests.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Iterator, Mapping, Optional, Union

from .errors import ParseError, ValidationError
from . import namespaces as ns

_IRI_BAD = re.compile(r'[<>"\s]')


@dataclass(frozen=True)
class Term:
    """An IRI or a literal. IRIs must be non-empty with no whitespace."""

    value: str
    is_literal: bool = False

    def __post_init__(self):
        if not self.is_literal:
            if not self.value:
                raise ValidationError("IRI must be non-empty")
            if _IRI_BAD.search(self.value):
                raise ValidationError(f"malformed IRI {self.value!r}: "
                                      "whitespace and <>\" are not allowed")

    @staticmethod
    def iri(value: str) -> "Term":
        return Term(value, is_literal=False)

    @staticmethod
    def literal(value: str) -> "Term":
        return Term(value, is_literal=True)


@dataclass(frozen=True)
class Triple:
    subject: Term
    predicate: Term
    object: Term

    def __post_init__(self):
        if self.subject.is_literal:
            raise ValidationError("triple subject must be an IRI")
        if self.predicate.is_literal:
            raise ValidationError("triple predicate must be an IRI")


@dataclass(frozen=True)
class Var:
    """A query variable; ``name`` excludes the leading ``?``."""

    name: str

    def __post_init__(self):
        if not re.fullmatch(r"[A-Za-z0-9_]+", self.name):
            raise ValidationError(f"bad variable name {self.name!r}")


PatternTerm = Union[Term, Var]
Pattern = tuple[PatternTerm, PatternTerm, PatternTerm]

MAX_PATTERNS = 4


class QueryKind(Enum):
    ASK = "ask"
    SELECT_DISTINCT = "select_distinct"
    COUNT = "count"


@dataclass
class Query:
    kind: QueryKind
    patterns: list[Pattern]
    var: Optional[str] = None
    prefixes: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if not self.patterns:
            raise ValidationError("query needs at least one triple pattern")
        if len(self.patterns) > MAX_PATTERNS:
            raise ValidationError(
                f"at most {MAX_PATTERNS} triple patterns supported, got {len(self.patterns)}")
        if self.kind is not QueryKind.ASK:
            if not self.var:
                raise ValidationError(f"{self.kind.value} query needs a projection variable")
            used = {t.name for p in self.patterns for t in p if isinstance(t, Var)}
            if self.var not in used:
                raise ValidationError(
                    f"projection variable ?{self.var} does not occur in any pattern")


QueryResult = Union[bool, int, list[Term]]


class Graph:
    """Immutable set of triples with single-position indexes.

    Insertion order is retained (first occurrence wins) so that pattern
    matching has a stable, documented candidate order.
    """

    def __init__(self, triples: Iterable[Triple] = (),
                 prefixes: Optional[Mapping[str, str]] = None):
        ordered: list[Triple] = []
        seen: set[Triple] = set()
        for t in triples:
            if t not in seen:
                seen.add(t)
                ordered.append(t)
        self._triples: tuple[Triple, ...] = tuple(ordered)
        self._set = frozenset(ordered)
        self.prefixes: dict[str, str] = dict(prefixes or {})
        self._by_s: dict[Term, list[Triple]] = {}
        self._by_p: dict[Term, list[Triple]] = {}
        self._by_o: dict[Term, list[Triple]] = {}
        for t in self._triples:
            self._by_s.setdefault(t.subject, []).append(t)
            self._by_p.setdefault(t.predicate, []).append(t)
            self._by_o.setdefault(t.object, []).append(t)

    def __len__(self) -> int:
        return len(self._triples)

    def __iter__(self) -> Iterator[Triple]:
        return iter(self._triples)

    def __contains__(self, t: Triple) -> bool:
        return t in self._set

    def __eq__(self, other) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return self._set == other._set

    def __hash__(self):
        return hash(self._set)

    def add(self, t: Triple) -> "Graph":
        """Return a graph containing ``t``; set semantics, self unchanged."""
        if t in self._set:
            return self
        return Graph(self._triples + (t,), self.prefixes)

    def candidates(self, pattern: Pattern) -> list[Triple]:
        """Triples that could match ``pattern``, in insertion order."""
        s, p, o = pattern
        pools = []
        if isinstance(s, Term):
            pools.append(self._by_s.get(s, []))
        if isinstance(p, Term):
            pools.append(self._by_p.get(p, []))
        if isinstance(o, Term):
            pools.append(self._by_o.get(o, []))
        if not pools:
            return list(self._triples)
        return min(pools, key=len)

    def labels(self, label_iri: str = ns.LABEL) -> dict[Term, str]:
        """Map of IRI term -> label literal from label triples."""
        pred = Term.iri(label_iri)
        out: dict[Term, str] = {}
        for t in self._by_p.get(pred, []):
            if t.object.is_literal and t.subject not in out:
                out[t.subject] = t.object.value
        return out


def insert_triple(graph: Graph, t: Triple) -> Graph:
    return graph.add(t)


# ---------------------------------------------------------------------------
# Line-oriented persistence: `<iri> <iri> (<iri>|"literal") .`, one per line,
# UTF-8, LF endings, `#` comments.

_ESCAPES = {"\\": "\\\\", '"': '\\"', "\n": "\\n", "\r": "\\r", "\t": "\\t"}
_UNESCAPES = {"\\": "\\", '"': '"', "n": "\n", "r": "\r", "t": "\t"}

_LINE_RE = re.compile(
    r'^<([^<>"\s]+)>\s+<([^<>"\s]+)>\s+(?:<([^<>"\s]+)>|"((?:[^"\\]|\\.)*)")\s+\.$'
)


def _escape_literal(value: str) -> str:
    return "".join(_ESCAPES.get(c, c) for c in value)


def _unescape_literal(raw: str, lineno: int) -> str:
    out = []
    i = 0
    while i < len(raw):
        c = raw[i]
        if c == "\\":
            if i + 1 >= len(raw):
                raise ParseError("dangling escape in literal", lineno)
            key = raw[i + 1]
            if key not in _UNESCAPES:
                raise ParseError(f"unknown escape \\{key} in literal", lineno)
            out.append(_UNESCAPES[key])
            i += 2
        else:
            out.append(c)
            i += 1
    return "".join(out)


def _term_to_nt(term: Term) -> str:
    if term.is_literal:
        return f'"{_escape_literal(term.value)}"'
    return f"<{term.value}>"


def serialize(graph: Graph) -> str:
    """Deterministic text form: lexicographically sorted lines."""
    lines = sorted(
        f"{_term_to_nt(t.subject)} {_term_to_nt(t.predicate)} {_term_to_nt(t.object)} ."
        for t in graph
    )
    return "\n".join(lines) + ("\n" if lines else "")


def parse_ntlines(text: str) -> Graph:
    """Parse the line format emitted by :func:`serialize`.

    Duplicate lines collapse; blank lines and ``#`` comments are skipped.
    """
    triples: list[Triple] = []
    for lineno, line in enumerate(text.split("\n"), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        m = _LINE_RE.match(stripped)
        if not m:
            raise ParseError(f"malformed triple line: {stripped!r}", lineno)
        subj, pred, obj_iri, obj_lit = m.groups()
        if obj_iri is not None:
            obj = Term.iri(obj_iri)
        else:
            obj = Term.literal(_unescape_literal(obj_lit, lineno))
        triples.append(Triple(Term.iri(subj), Term.iri(pred), obj))
    return Graph(triples)


# ---------------------------------------------------------------------------
# SPARQL-subset parser.

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<iri><[^<>"\s]*>)
  | (?P<string>"(?:[^"\\]|\\.)*")
  | (?P<var>\?[A-Za-z0-9_]+)
  | (?P<pname>[A-Za-z][A-Za-z0-9_-]*:[A-Za-z0-9_/.%#-]*)
  | (?P<word>[A-Za-z][A-Za-z0-9_]*)
  | (?P<punct>[{}().])
    """,
    re.VERBOSE,
)


def _tokenize_query(text: str) -> list[str]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r} in query")
        if m.lastgroup != "ws":
            tokens.append(m.group())
        pos = m.end()
    return tokens


class _TokenStream:
    def __init__(self, tokens: list[str]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> Optional[str]:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def next(self, what: str = "token") -> str:
        tok = self.peek()
        if tok is None:
            raise ParseError(f"unexpected end of query, expected {what}")
        self.pos += 1
        return tok

    def expect_word(self, word: str) -> None:
        tok = self.next(word)
        if tok.upper() != word:
            raise ParseError(f"expected {word}, got {tok!r}")

    def expect(self, tok: str) -> None:
        got = self.next(tok)
        if got != tok:
            raise ParseError(f"expected {tok!r}, got {got!r}")


def _resolve_term(tok: str, prefixes: Mapping[str, str]) -> PatternTerm:
    if tok.startswith("?"):
        return Var(tok[1:])
    if tok.startswith("<") and tok.endswith(">"):
        return Term.iri(tok[1:-1])
    if tok.startswith('"') and tok.endswith('"'):
        return Term.literal(_unescape_literal(tok[1:-1], 0))
    if ":" in tok:
        prefix, local = tok.split(":", 1)
        if prefix not in prefixes:
            raise ParseError(f"unknown prefix {prefix!r} in {tok!r}")
        return Term.iri(prefixes[prefix] + local)
    raise ParseError(f"cannot parse term {tok!r}")


def parse_sparql(text: str) -> Query:
    """Parse the supported subset; errors name the offending token."""
    stream = _TokenStream(_tokenize_query(text))
    prefixes: dict[str, str] = {}
    while stream.peek() is not None and stream.peek().upper() == "PREFIX":
        stream.next()
        pname = stream.next("prefix name")
        if not pname.endswith(":") or ":" not in pname:
            raise ParseError(f"bad prefix declaration {pname!r}")
        iri_tok = stream.next("prefix IRI")
        if not (iri_tok.startswith("<") and iri_tok.endswith(">")):
            raise ParseError(f"prefix IRI expected, got {iri_tok!r}")
        prefixes[pname[:-1]] = iri_tok[1:-1]

    head = stream.next("ASK or SELECT")
    if head.upper() == "ASK":
        kind, var = QueryKind.ASK, None
    elif head.upper() == "SELECT":
        tok = stream.next("DISTINCT or (")
        if tok.upper() == "DISTINCT":
            var_tok = stream.next("projection variable")
            if not var_tok.startswith("?"):
                raise ParseError(f"projection variable expected, got {var_tok!r}")
            kind, var = QueryKind.SELECT_DISTINCT, var_tok[1:]
        elif tok == "(":
            stream.expect_word("COUNT")
            stream.expect("(")
            stream.expect_word("DISTINCT")
            var_tok = stream.next("count variable")
            if not var_tok.startswith("?"):
                raise ParseError(f"count variable expected, got {var_tok!r}")
            stream.expect(")")
            stream.expect_word("AS")
            alias = stream.next("count alias")
            if not alias.startswith("?"):
                raise ParseError(f"count alias expected, got {alias!r}")
            stream.expect(")")
            kind, var = QueryKind.COUNT, var_tok[1:]
        else:
            raise ParseError(f"unsupported SELECT clause at {tok!r}")
    else:
        raise ParseError(f"unsupported query form {head!r}")

    if stream.peek() is not None and stream.peek().upper() == "WHERE":
        stream.next()
    stream.expect("{")

    patterns: list[Pattern] = []
    while True:
        tok = stream.peek()
        if tok is None:
            raise ParseError("unexpected end of query inside WHERE block")
        if tok == "}":
            stream.next()
            break
        terms = []
        for _ in range(3):
            t = stream.next("triple pattern term")
            if t in "{}().":
                raise ParseError(f"triple pattern arity: expected term, got {t!r}")
            terms.append(_resolve_term(t, prefixes))
        patterns.append((terms[0], terms[1], terms[2]))
        if len(patterns) > MAX_PATTERNS:
            raise ParseError(f"more than {MAX_PATTERNS} triple patterns")
        nxt = stream.peek()
        if nxt == ".":
            stream.next()
        elif nxt not in ("}",):
            raise ParseError(f"expected '.' or '}}', got {nxt!r}")

    if stream.peek() is not None:
        raise ParseError(f"trailing token {stream.peek()!r} after query")

    try:
        return Query(kind=kind, patterns=patterns, var=var, prefixes=prefixes)
    except ValidationError as exc:
        raise ParseError(str(exc)) from exc


def _abbreviate(term: PatternTerm, prefixes: Mapping[str, str]) -> str:
    if isinstance(term, Var):
        return f"?{term.name}"
    if term.is_literal:
        return f'"{_escape_literal(term.value)}"'
    best = None
    for prefix, base in prefixes.items():
        if term.value.startswith(base) and (best is None or len(base) > len(best[1])):
            local = term.value[len(base):]
            if re.fullmatch(r"[A-Za-z0-9_/.%#-]*", local):
                best = (prefix, base, local)
    if best is None:
        return f"<{term.value}>"
    return f"{best[0]}:{best[2]}"


def format_query(query: Query) -> str:
    """Render a query back to text; inverse of :func:`parse_sparql`."""
    used_prefixes = set()
    body_parts = []
    for p in query.patterns:
        rendered = [_abbreviate(t, query.prefixes) for t in p]
        for r in rendered:
            if ":" in r and not r.startswith(("<", '"', "?")):
                used_prefixes.add(r.split(":", 1)[0])
        body_parts.append(" ".join(rendered))
    body = " . ".join(body_parts)
    lines = [
        f"PREFIX {p}: <{query.prefixes[p]}>"
        for p in sorted(used_prefixes)
    ]
    if query.kind is QueryKind.ASK:
        clause = f"ASK WHERE {{ {body} }}"
    elif query.kind is QueryKind.SELECT_DISTINCT:
        clause = f"SELECT DISTINCT ?{query.var} WHERE {{ {body} }}"
    else:
        clause = f"SELECT (COUNT(DISTINCT ?{query.var}) AS ?c) WHERE {{ {body} }}"
    lines.append(clause)
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Executor.

Binding = dict[str, Term]


def _match(pattern: Pattern, triple: Triple, binding: Binding) -> Optional[Binding]:
    out = binding
    for pat_term, got in zip(pattern, (triple.subject, triple.predicate, triple.object)):
        if isinstance(pat_term, Term):
            if pat_term != got:
                return None
        else:
            bound = out.get(pat_term.name)
            if bound is None:
                if out is binding:
                    out = dict(binding)
                out[pat_term.name] = got
            elif bound != got:
                return None
    return out


def _solutions(graph: Graph, patterns: list[Pattern]) -> Iterator[Binding]:
    """All solution bindings, in order of first derivation."""

    def rec(i: int, binding: Binding) -> Iterator[Binding]:
        if i == len(patterns):
            yield binding
            return
        pattern = tuple(
            binding.get(t.name, t) if isinstance(t, Var) and t.name in binding else t
            for t in patterns[i]
        )
        for triple in graph.candidates(pattern):
            extended = _match(pattern, triple, binding)
            if extended is not None:
                yield from rec(i + 1, extended)

    yield from rec(0, {})


def execute(graph: Graph, query: Query) -> QueryResult:
    """Run a query; see :class:`Query` for the supported shapes.

    SELECT DISTINCT returns the projection variable's bindings without
    duplicates, ordered by first derivation; COUNT returns the size of
    that list; ASK returns whether any solution exists.
    """
    if query.kind is QueryKind.ASK:
        for _ in _solutions(graph, query.patterns):
            return True
        return False

    assert query.var is not None  # enforced by Query invariant
    seen: set[Term] = set()
    ordered: list[Term] = []
    for binding in _solutions(graph, query.patterns):
        value = binding[query.var]
        if value not in seen:
            seen.add(value)
            ordered.append(value)
    if query.kind is QueryKind.SELECT_DISTINCT:
        return ordered
    return len(ordered)


def ask(graph: Graph, patterns: list[Pattern]) -> bool:
    """ASK over a basic graph pattern without going through query text."""
    return execute(graph, Query(kind=QueryKind.ASK, patterns=patterns))


# ---------------------------------------------------------------------------
# Graph statistics in the shape of the KG properties table.

@dataclass(frozen=True)
class StatsConfig:
    class_prefixes: tuple[str, ...] = (ns.CLASS,)
    instance_prefixes: tuple[str, ...] = (ns.INST, ns.ACC)
    relation_prefixes: tuple[str, ...] = (ns.REL,)
    data_prefixes: tuple[str, ...] = (ns.DATA,)


@dataclass(frozen=True)
class KgStats:
    entity_classes: int
    individuals: int
    object_properties: int
    data_properties: int
    axioms: int

    def as_dict(self) -> dict[str, int]:
        return {
            "entity_classes": self.entity_classes,
            "individuals": self.individuals,
            "object_properties": self.object_properties,
            "data_properties": self.data_properties,
            "axioms": self.axioms,
        }


def _starts_with_any(iri: str, prefixes: tuple[str, ...]) -> bool:
    return any(iri.startswith(p) for p in prefixes)


def stats(graph: Graph, config: StatsConfig = StatsConfig()) -> KgStats:
    """Count classes/individuals/properties by IRI namespace membership."""
    classes: set[str] = set()
    individuals: set[str] = set()
    object_props: set[str] = set()
    data_props: set[str] = set()
    for t in graph:
        for term in (t.subject, t.object):
            if term.is_literal:
                continue
            if _starts_with_any(term.value, config.class_prefixes):
                classes.add(term.value)
            elif _starts_with_any(term.value, config.instance_prefixes):
                individuals.add(term.value)
        pred = t.predicate.value
        if _starts_with_any(pred, config.relation_prefixes):
            object_props.add(pred)
        elif _starts_with_any(pred, config.data_prefixes):
            data_props.add(pred)
    return KgStats(
        entity_classes=len(classes),
        individuals=len(individuals),
        object_properties=len(object_props),
        data_properties=len(data_props),
        axioms=len(graph),
    )

"""Parser and executor for the restricted query dialect used by the question templates.

The dialect covers single-variable SELECT queries over conjunctive triple
patterns: ``SELECT ?v WHERE { wd:Q1 wdt:P1 ?v. ... }`` with ``wd:`` entity
constants, ``wdt:`` relation constants, and ``?``-prefixed variables. Double
braces around the body are accepted as well. Nothing beyond conjunctive
patterns (no OPTIONAL, FILTER, or property paths) is supported.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Iterator

from .kg import KnowledgeGraph

ENTITY = "entity"
RELATION = "relation"
VARIABLE = "variable"

_ID_RE = re.compile(r"^\w+$")
_VAR_RE = re.compile(r"^\?\w+$")
_HEADER_RE = re.compile(r"^\s*SELECT\s+(?P<vars>.*?)\s+WHERE\s*(?P<brace>\{\{|\{)", re.IGNORECASE | re.DOTALL)


@dataclass(frozen=True)
class Term:
    kind: str
    value: str

    @classmethod
    def entity(cls, entity_id: str) -> "Term":
        return cls(ENTITY, entity_id)

    @classmethod
    def relation(cls, relation_id: str) -> "Term":
        return cls(RELATION, relation_id)

    @classmethod
    def variable(cls, name: str) -> "Term":
        if not _VAR_RE.match(name):
            raise ValueError(f"variable names start with '?': {name!r}")
        return cls(VARIABLE, name)

    @property
    def is_variable(self) -> bool:
        return self.kind == VARIABLE


@dataclass(frozen=True)
class TriplePattern:
    subject: Term
    predicate: Term
    object: Term

    def terms(self) -> tuple[Term, Term, Term]:
        return (self.subject, self.predicate, self.object)

    def variables(self) -> set[str]:
        return {term.value for term in self.terms() if term.is_variable}


@dataclass(frozen=True)
class BgpQuery:
    select_variable: str
    patterns: tuple[TriplePattern, ...]

    def __post_init__(self) -> None:
        if not self.patterns:
            raise ValueError("query needs at least one pattern")
        if len(self.patterns) > 4:
            raise ValueError("query exceeds the four-pattern template maximum")
        if self.select_variable not in self.variables():
            raise ValueError(f"select variable {self.select_variable} does not occur in any pattern")

    def variables(self) -> set[str]:
        names: set[str] = set()
        for pattern in self.patterns:
            names |= pattern.variables()
        return names


class QueryParseError(ValueError):
    """Parse failure; `position` is a character offset into the query text."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at offset {position})")
        self.position = position


def _parse_term(token: str, position: int) -> Term:
    if token.startswith("?"):
        if not _VAR_RE.match(token):
            raise QueryParseError(f"malformed variable {token!r}", position)
        return Term.variable(token)
    if ":" in token:
        prefix, _, local = token.partition(":")
        if not _ID_RE.match(local):
            raise QueryParseError(f"malformed id {token!r}", position)
        if prefix == "wd":
            return Term.entity(local)
        if prefix == "wdt":
            return Term.relation(local)
        raise QueryParseError(f"unknown prefix {prefix!r}", position)
    raise QueryParseError(f"expected wd:/wdt: constant or ?variable, got {token!r}", position)


def parse_query(text: str) -> BgpQuery:
    """Parse the template dialect into a BgpQuery; whitespace and newlines are insignificant."""
    header = _HEADER_RE.match(text)
    if not header:
        raise QueryParseError("expected 'SELECT ?var WHERE {'", 0)
    select_tokens = header.group("vars").split()
    if len(select_tokens) != 1:
        raise QueryParseError(f"exactly one select variable expected, got {len(select_tokens)}", text.index("SELECT") if "SELECT" in text else 0)
    select_variable = select_tokens[0]
    if not _VAR_RE.match(select_variable):
        raise QueryParseError(f"malformed select variable {select_variable!r}", header.start("vars"))

    brace = header.group("brace")
    body_start = header.end()
    closer = "}" * len(brace)
    stripped = text.rstrip()
    if not stripped.endswith(closer):
        raise QueryParseError(f"expected closing {closer!r}", len(stripped))
    body = text[body_start: len(stripped) - len(closer)]

    patterns: list[TriplePattern] = []
    terms: list[Term] = []
    last_position = body_start
    for match in re.finditer(r"\S+", body):
        token = match.group()
        position = body_start + match.start()
        last_position = position + len(token)
        terminated = False
        if token == ".":
            if len(terms) != 3:
                raise QueryParseError("'.' terminator outside a complete pattern", position)
            terminated = True
        else:
            if token.endswith("."):
                token = token[:-1]
                terminated = True
            if len(terms) == 3:
                raise QueryParseError("missing '.' terminator before next pattern", position)
            terms.append(_parse_term(token, position))
        if terminated:
            if len(terms) != 3:
                raise QueryParseError("pattern terminated before three terms", position)
            subject, predicate, obj = terms
            if subject.kind == RELATION or obj.kind == RELATION:
                raise QueryParseError("wdt: constants are only valid in predicate position", position)
            if predicate.kind == ENTITY:
                raise QueryParseError("wd: constants are not valid in predicate position", position)
            patterns.append(TriplePattern(subject, predicate, obj))
            terms = []
    if terms:
        raise QueryParseError("missing '.' terminator at end of pattern list", last_position)
    if not patterns:
        raise QueryParseError("empty pattern list", body_start)
    if len(patterns) > 4:
        raise QueryParseError("more than four patterns", body_start)
    if select_variable not in {name for pattern in patterns for name in pattern.variables()}:
        raise QueryParseError(f"select variable {select_variable} unused", body_start)
    return BgpQuery(select_variable, tuple(patterns))


def format_query(query: BgpQuery) -> str:
    """Canonical printer; parse_query(format_query(q)) == q."""

    def fmt(term: Term) -> str:
        if term.kind == VARIABLE:
            return term.value
        prefix = "wd" if term.kind == ENTITY else "wdt"
        return f"{prefix}:{term.value}"

    body = " ".join(f"{fmt(p.subject)} {fmt(p.predicate)} {fmt(p.object)}." for p in query.patterns)
    return f"SELECT {query.select_variable} WHERE {{{{ {body} }}}}"


def _resolve(term: Term, binding: dict[str, str]) -> str | None:
    if term.is_variable:
        return binding.get(term.value)
    return term.value


def _candidates(graph: KnowledgeGraph, pattern: TriplePattern, binding: dict[str, str]) -> frozenset:
    subject = _resolve(pattern.subject, binding)
    obj = _resolve(pattern.object, binding)
    predicate = _resolve(pattern.predicate, binding)
    if subject is not None:
        return graph.incident(subject)
    if obj is not None:
        return graph.incident(obj)
    if predicate is not None:
        return graph.with_relation(predicate)
    return frozenset(graph.triples)


def _match(graph: KnowledgeGraph, pattern: TriplePattern, binding: dict[str, str]) -> Iterator[dict[str, str]]:
    for triple in _candidates(graph, pattern, binding):
        extension: dict[str, str] = {}
        consistent = True
        for term, value in zip(pattern.terms(), triple):
            if term.is_variable:
                bound = binding.get(term.value, extension.get(term.value))
                if bound is None:
                    extension[term.value] = value
                elif bound != value:
                    consistent = False
                    break
            elif term.value != value:
                consistent = False
                break
        if consistent:
            yield {**binding, **extension}


def _join(graph: KnowledgeGraph, patterns: tuple[TriplePattern, ...], binding: dict[str, str]) -> Iterator[dict[str, str]]:
    if not patterns:
        yield binding
        return
    # Cheapest-first join: expand the pattern with the fewest index candidates
    # under the current binding.
    index = min(range(len(patterns)), key=lambda i: len(_candidates(graph, patterns[i], binding)))
    rest = patterns[:index] + patterns[index + 1:]
    for extended in _match(graph, patterns[index], binding):
        yield from _join(graph, rest, extended)


def execute(graph: KnowledgeGraph, query: BgpQuery, bindings: dict[str, str] | None = None) -> set[str]:
    """All values of the select variable over assignments satisfying every pattern.

    Patterns match directed triples of the graph; non-selected variables are
    existential. Unsatisfiable queries return the empty set.
    """
    initial = dict(bindings or {})
    if initial:
        unknown = set(initial) - query.variables()
        if unknown:
            raise ValueError(f"bindings for variables not in the query: {sorted(unknown)}")
    return {solution[query.select_variable] for solution in _join(graph, query.patterns, initial)}


def enumerate_bindings(
    graph: KnowledgeGraph,
    patterns: Iterable[TriplePattern],
    free: Iterable[str],
) -> list[dict[str, str]]:
    """Every satisfiable complete assignment of the free variables, sorted by bound ids."""
    pattern_tuple = tuple(patterns)
    free_list = list(free)
    declared = {name for pattern in pattern_tuple for name in pattern.variables()}
    missing = set(free_list) - declared
    if missing:
        raise ValueError(f"free variables not present in patterns: {sorted(missing)}")
    seen: set[tuple[str, ...]] = set()
    results: list[dict[str, str]] = []
    for solution in _join(graph, pattern_tuple, {}):
        key = tuple(solution[name] for name in free_list)
        if key not in seen:
            seen.add(key)
            results.append({name: solution[name] for name in free_list})
    results.sort(key=lambda b: tuple(b[name] for name in free_list))
    return results

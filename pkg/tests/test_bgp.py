import itertools
import random

import pytest

import oracles
from conftest import random_graph
from kbqakit.bgp import (
    BgpQuery,
    QueryParseError,
    Term,
    TriplePattern,
    enumerate_bindings,
    execute,
    parse_query,
)
from kbqakit.kg import KnowledgeGraph


def small_graph() -> KnowledgeGraph:
    graph = KnowledgeGraph()
    for eid, label in (("Q255", "composer a"), ("QSalieri", "composer b"),
                       ("Q215333", "teacher"), ("Qx", "name"), ("Q5", "human")):
        graph.add_entity(eid, label)
    graph.add_relation("P735", "given name")
    graph.add_relation("P802", "student")
    graph.add_relation("P31", "instance of")
    graph.add_triple("Q255", "P735", "Qx")
    graph.add_triple("Q255", "P802", "Q215333")
    graph.add_triple("QSalieri", "P802", "Q215333")
    graph.add_triple("Q255", "P31", "Q5")
    graph.add_triple("QSalieri", "P31", "Q5")
    return graph


def test_parse_one_hop():
    query = parse_query("SELECT ?answerEntity WHERE {{ wd:Q255 wdt:P735 ?answerEntity. }}")
    assert query.select_variable == "?answerEntity"
    assert len(query.patterns) == 1
    pattern = query.patterns[0]
    assert pattern.subject == Term.entity("Q255")
    assert pattern.predicate == Term.relation("P735")
    assert pattern.object == Term.variable("?answerEntity")


def test_parse_reverse_pattern():
    query = parse_query("SELECT ?answerEntity WHERE {{ ?answerEntity wdt:P802 wd:Q215333. }}")
    pattern = query.patterns[0]
    assert pattern.subject.is_variable
    assert pattern.object == Term.entity("Q215333")


def test_parse_single_braces_and_newlines():
    query = parse_query("SELECT ?a WHERE {\n  wd:Q1 wdt:P1 ?a.\n  ?a wdt:P2 wd:Q2.\n}")
    assert [p.predicate.value for p in query.patterns] == ["P1", "P2"]


def test_parse_empty_body_is_error():
    with pytest.raises(QueryParseError):
        parse_query("SELECT ?x WHERE { }")


def test_parse_errors_carry_position():
    with pytest.raises(QueryParseError) as err:
        parse_query("SELECT ?x WHERE { wd:Q1 foo:P1 ?x. }")
    assert err.value.position is not None


def test_parse_missing_terminator():
    with pytest.raises(QueryParseError):
        parse_query("SELECT ?x WHERE { wd:Q1 wdt:P1 ?x }")


def test_query_rejects_unused_select_variable():
    with pytest.raises(ValueError):
        BgpQuery("?missing", (TriplePattern(Term.entity("Q1"), Term.relation("P1"), Term.variable("?x")),))


def test_query_pattern_count_bounds():
    pattern = TriplePattern(Term.variable("?x"), Term.relation("P1"), Term.entity("Q1"))
    with pytest.raises(ValueError):
        BgpQuery("?x", ())
    with pytest.raises(ValueError):
        BgpQuery("?x", (pattern,) * 5)


def test_execute_one_hop():
    query = parse_query("SELECT ?a WHERE { wd:Q255 wdt:P735 ?a. }")
    assert execute(small_graph(), query) == {"Qx"}


def test_execute_reverse_one_hop():
    query = parse_query("SELECT ?a WHERE { ?a wdt:P802 wd:Q215333. }")
    assert execute(small_graph(), query) == {"Q255", "QSalieri"}


def test_execute_empty_graph():
    query = parse_query("SELECT ?a WHERE { wd:Q255 wdt:P735 ?a. }")
    assert execute(KnowledgeGraph(), query) == set()


def test_execute_with_prebound_variable():
    query = parse_query("SELECT ?a WHERE { ?a wdt:P802 ?t. }")
    assert execute(small_graph(), query, bindings={"?t": "Q215333"}) == {"Q255", "QSalieri"}


def test_execute_join_two_patterns():
    query = parse_query("SELECT ?a WHERE { ?a wdt:P31 wd:Q5. ?a wdt:P735 wd:Qx. }")
    assert execute(small_graph(), query) == {"Q255"}


def test_execute_pattern_order_irrelevant():
    graph = small_graph()
    base = parse_query("SELECT ?a WHERE { ?a wdt:P31 wd:Q5. ?a wdt:P802 wd:Q215333. }")
    for perm in itertools.permutations(base.patterns):
        assert execute(graph, BgpQuery(base.select_variable, perm)) == execute(graph, base)


def test_enumerate_single_pattern_scan():
    patterns = [TriplePattern(Term.variable("?e"), Term.relation("P31"), Term.entity("Q5"))]
    bindings = enumerate_bindings(small_graph(), patterns, ["?e"])
    assert bindings == [{"?e": "Q255"}, {"?e": "QSalieri"}]


def test_enumerate_unsatisfiable():
    patterns = [TriplePattern(Term.variable("?e"), Term.relation("P31"), Term.entity("Qx"))]
    assert enumerate_bindings(small_graph(), patterns, ["?e"]) == []


def test_enumerate_joined_patterns_match_oracle():
    graph = small_graph()
    patterns = [
        TriplePattern(Term.variable("?s"), Term.relation("P802"), Term.variable("?t")),
        TriplePattern(Term.variable("?s"), Term.relation("P31"), Term.entity("Q5")),
    ]
    got = enumerate_bindings(graph, patterns, ["?s", "?t"])
    facts = {(t.head, t.relation, t.tail) for t in graph.triples}
    expected = sorted(
        ({"?s": s, "?t": t} for s in graph.entities for t in graph.entities
         if (s, "P802", t) in facts and (s, "P31", "Q5") in facts),
        key=lambda b: (b["?s"], b["?t"]),
    )
    assert got == expected


def random_query(rng: random.Random, graph: KnowledgeGraph) -> BgpQuery:
    entities = sorted(graph.entities)
    relations = sorted(graph.relations)
    variables = ["?a", "?b", "?c"]
    n_patterns = rng.randint(1, 3)
    patterns = []
    used_vars = []
    for _ in range(n_patterns):
        def endpoint():
            if rng.random() < 0.5:
                name = rng.choice(variables)
                used_vars.append(name)
                return Term.variable(name)
            return Term.entity(rng.choice(entities))
        subject = endpoint()
        obj = endpoint()
        if not subject.is_variable and not obj.is_variable and rng.random() < 0.8:
            obj = Term.variable(rng.choice(variables))
            used_vars.append(obj.value)
        patterns.append(TriplePattern(subject, Term.relation(rng.choice(relations)), obj))
    if not used_vars:
        return random_query(rng, graph)
    return BgpQuery(rng.choice(used_vars), tuple(patterns))


def test_execute_matches_oracle_random():
    rng = random.Random(23)
    for _ in range(40):
        graph = random_graph(rng, max_entities=12)
        query = random_query(rng, graph)
        assert execute(graph, query) == oracles.bgp_answers(graph, query)

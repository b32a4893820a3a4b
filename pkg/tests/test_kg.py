import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from conftest import random_graph
from kbqakit.kg import (
    GraphLoadError,
    KnowledgeGraph,
    MissingLabelError,
    UnknownEntityError,
    load_graph,
    neighborhood,
    sample_dataset_kg,
    save_graph,
    verbalize_triple,
)
from kbqakit.records import KbqaExample


def chain_graph() -> KnowledgeGraph:
    graph = KnowledgeGraph()
    for eid in ("a", "b", "c"):
        graph.add_entity(eid, eid.upper())
    graph.add_relation("r", "rel")
    graph.add_triple("a", "r", "b")
    graph.add_triple("b", "r", "c")
    return graph


def test_load_empty_files(tmp_path):
    triples = tmp_path / "t.tsv"
    labels = tmp_path / "l.tsv"
    triples.write_text("")
    labels.write_text("")
    graph = load_graph(triples, labels)
    assert len(graph.entities) == 0
    assert len(graph.triples) == 0


def test_load_singleton(tmp_path):
    (tmp_path / "t.tsv").write_text("Q255\tP735\tQ000\n")
    (tmp_path / "l.tsv").write_text("Q255\tBeethoven\nQ000\tLudwig\nP735\tgiven name\n")
    graph = load_graph(tmp_path / "t.tsv", tmp_path / "l.tsv")
    assert len(graph.entities) == 2
    assert len(graph.relations) == 1
    assert len(graph.triples) == 1


def test_duplicate_lines_collapse(tmp_path):
    (tmp_path / "t.tsv").write_text("Q1\tP1\tQ2\n" * 3)
    (tmp_path / "l.tsv").write_text("Q1\ta\nQ2\tb\nP1\tr\n")
    graph = load_graph(tmp_path / "t.tsv", tmp_path / "l.tsv")
    assert len(graph.triples) == 1


def test_malformed_row_rejected(tmp_path):
    (tmp_path / "t.tsv").write_text("Q1\tP1\n")
    (tmp_path / "l.tsv").write_text("")
    with pytest.raises(GraphLoadError):
        load_graph(tmp_path / "t.tsv", tmp_path / "l.tsv")


def test_save_load_round_trip(tmp_path, beethoven):
    save_graph(beethoven, tmp_path / "t.tsv", tmp_path / "l.tsv")
    back = load_graph(tmp_path / "t.tsv", tmp_path / "l.tsv")
    assert back.triples == beethoven.triples
    assert set(back.entities) == set(beethoven.entities)
    assert back.entity_label("Q255") == "Ludwig van Beethoven"


def test_aliases_round_trip(tmp_path, beethoven):
    save_graph(beethoven, tmp_path / "t.tsv", tmp_path / "l.tsv")
    back = load_graph(tmp_path / "t.tsv", tmp_path / "l.tsv")
    assert "Beethoven" in back.entities["Q255"].aliases


def test_neighborhood_chain_one_hop():
    graph = chain_graph()
    sub = neighborhood(graph, {"a"}, 1)
    assert {(t.head, t.relation, t.tail) for t in sub.triples} == {("a", "r", "b")}
    assert set(sub.entities) == {"a", "b"}


def test_neighborhood_chain_zero_hops():
    sub = neighborhood(chain_graph(), {"a"}, 0)
    assert set(sub.entities) == {"a"}
    assert not sub.triples


def test_neighborhood_unknown_seed():
    with pytest.raises(UnknownEntityError) as err:
        neighborhood(chain_graph(), {"zz"}, 1)
    assert "zz" in str(err.value)


def test_neighborhood_copies_labels():
    sub = neighborhood(chain_graph(), {"a"}, 1)
    assert sub.entity_label("b") == "B"
    assert sub.relation_label("r") == "rel"


def test_neighborhood_matches_oracle_random():
    rng = random.Random(11)
    for _ in range(40):
        graph = random_graph(rng, max_entities=20)
        ids = sorted(graph.entities)
        seeds = set(rng.sample(ids, min(len(ids), rng.randint(1, 3))))
        hops = rng.randint(0, 3)
        sub = neighborhood(graph, seeds, hops)
        entities, triples = oracles.neighborhood_sets(graph, seeds, hops)
        assert set(sub.entities) == entities
        assert sub.triples == triples


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31), st.integers(0, 3))
def test_neighborhood_monotone_in_hops(seed, hops):
    rng = random.Random(seed)
    graph = random_graph(rng, max_entities=12)
    seeds = {sorted(graph.entities)[0]}
    smaller = neighborhood(graph, seeds, hops)
    larger = neighborhood(graph, seeds, hops + 1)
    assert smaller.triples <= larger.triples
    assert set(smaller.entities) <= set(larger.entities)


def example(topics, answers):
    return KbqaExample(item_id="x", question="q?", topic_entities=set(topics),
                       answer_entities=set(answers), source="natural")


def test_sample_dataset_kg_single_example(beethoven):
    ex = example({"Q255"}, {"Q9001"})
    sampled = sample_dataset_kg(beethoven, [ex], hops=1)
    direct = neighborhood(beethoven, {"Q255", "Q9001"}, 1)
    assert sampled.triples == direct.triples


def test_sample_dataset_kg_union(beethoven):
    a = example({"Q255"}, set())
    b = example({"Q586"}, set())
    union = sample_dataset_kg(beethoven, [a, b], hops=1)
    expected = neighborhood(beethoven, {"Q255"}, 1).triples | neighborhood(beethoven, {"Q586"}, 1).triples
    assert union.triples == expected


def test_sample_dataset_kg_one_hop_subset_of_two_hop(beethoven):
    examples = [example({"Q255"}, {"Q9001"}), example({"Q215333"}, {"Q36834"})]
    one = sample_dataset_kg(beethoven, examples, hops=1)
    two = sample_dataset_kg(beethoven, examples, hops=2)
    assert one.triples <= two.triples


def test_verbalize_triple(beethoven):
    triple = next(t for t in beethoven.triples if t.head == "Q255" and t.relation == "P735")
    assert verbalize_triple(beethoven, triple) == "(Ludwig van Beethoven, given name, Ludwig)"


def test_verbalize_requires_labels():
    graph = KnowledgeGraph()
    graph.add_entity("Q1", "one")
    graph.add_relation("P1", "rel")
    graph.add_triple("Q1", "P1", "Q2")
    with pytest.raises(MissingLabelError) as err:
        verbalize_triple(graph, next(iter(graph.triples)))
    assert err.value.item_id == "Q2"


def test_verbalize_commas_verbatim():
    graph = KnowledgeGraph()
    graph.add_entity("Q1", "a, b")
    graph.add_entity("Q2", "c")
    graph.add_relation("P1", "rel")
    graph.add_triple("Q1", "P1", "Q2")
    assert verbalize_triple(graph, next(iter(graph.triples))) == "(a, b, rel, c)"

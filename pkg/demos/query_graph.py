"""Tour of the graph layer: queries, templates, and n-hop sampling.

Loads the bundled worked-example graph and shows the pieces the template
stage is built from: a parsed graph-pattern query, a template instantiated
into a question with its answer set, and a sampled subgraph.

Run from the repository root:  python3 demos/query_graph.py
"""

from __future__ import annotations

import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from kbqakit.bgp import execute, parse_query  # noqa: E402
from kbqakit.kg import load_graph, neighborhood, verbalize_triple  # noqa: E402
from kbqakit.templates import gather_inputs, instantiate, template_by_name  # noqa: E402

QUERY = """
SELECT ?answerEntity WHERE {{
  ?answerEntity wdt:P802 wd:Q215333.
}}
"""


def main() -> int:
    graph = load_graph(
        ROOT / "fixtures" / "beethoven" / "triples.tsv",
        ROOT / "fixtures" / "beethoven" / "labels.tsv",
    )
    print(f"graph: {len(graph.entities)} entities, {len(graph.triples)} triples")
    print()

    query = parse_query(QUERY)
    answers = execute(graph, query)
    print("whose student is Carl Czerny (as a graph pattern)?")
    for entity_id in sorted(answers):
        print(f"  {entity_id}: {graph.entity_label(entity_id)}")
    print()

    template = template_by_name("reverse-two-hop-with-mask")
    inputs = {
        "mask": "Q36834", "relation1": "P509", "entity1": "Q147778",
        "relation2": "P20", "entity2": "Q1741",
    }
    instance = instantiate(graph, template, inputs)
    print(f"template {template.name!r}:")
    print(f"  Q: {instance.question}")
    print(f"  A: {sorted(instance.answers)}")
    print()

    print("same template, every satisfiable binding on this graph:")
    entities = set(graph.entities)
    relations = set(graph.relations)
    for found in gather_inputs(graph, template, entities, relations, limit=5):
        bound = instantiate(graph, template, found)
        print(f"  {bound.question} -> {sorted(bound.answers)}")
    print()

    seeds = {"Q255"}
    for hops in (1, 2):
        sample = neighborhood(graph, seeds, hops)
        print(f"{hops}-hop neighborhood of Q255: {len(sample.triples)} triples")
    one_hop = neighborhood(graph, seeds, 1)
    print("a few verbalized triples:")
    for triple in sorted(one_hop.triples)[:3]:
        print(f"  {verbalize_triple(graph, triple)}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""In-memory multi-relational knowledge graph: TSV loading, labels, n-hop sampling, verbalization.

File formats (tab-separated, UTF-8):
  triples: ``head<TAB>relation<TAB>tail`` per line
  labels:  ``id<TAB>label[<TAB>alias1|alias2|...]`` per line

Graphs are treated as immutable after loading; all traversal helpers return new graphs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple


class Triple(NamedTuple):
    head: str
    relation: str
    tail: str


@dataclass
class EntityInfo:
    label: str | None = None
    aliases: list[str] = field(default_factory=list)


@dataclass
class RelationInfo:
    label: str | None = None


class GraphLoadError(ValueError):
    """Malformed graph file; carries the offending path and line number."""

    def __init__(self, path: str | Path, line_no: int, message: str):
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = str(path)
        self.line_no = line_no


class UnknownEntityError(KeyError):
    def __init__(self, entity_ids: Iterable[str]):
        ids = sorted(entity_ids)
        super().__init__(f"unknown entity id(s): {', '.join(ids)}")
        self.entity_ids = ids


class MissingLabelError(ValueError):
    def __init__(self, item_id: str):
        super().__init__(f"no label for id: {item_id}")
        self.item_id = item_id


class KnowledgeGraph:
    """Entities, relations, and a deduplicated triple set with a bidirectional adjacency index."""

    def __init__(self) -> None:
        self.entities: dict[str, EntityInfo] = {}
        self.relations: dict[str, RelationInfo] = {}
        self.triples: set[Triple] = set()
        self._adjacency: dict[str, set[Triple]] = {}
        self._by_relation: dict[str, set[Triple]] = {}

    # -- construction -------------------------------------------------

    def add_entity(self, entity_id: str, label: str | None = None, aliases: Iterable[str] = ()) -> None:
        if not entity_id:
            raise ValueError("entity id must be non-empty")
        info = self.entities.setdefault(entity_id, EntityInfo())
        if label is not None:
            info.label = label
        for alias in aliases:
            if alias not in info.aliases:
                info.aliases.append(alias)

    def add_relation(self, relation_id: str, label: str | None = None) -> None:
        if not relation_id:
            raise ValueError("relation id must be non-empty")
        info = self.relations.setdefault(relation_id, RelationInfo())
        if label is not None:
            info.label = label

    def add_triple(self, head: str, relation: str, tail: str) -> None:
        self.add_entity(head)
        self.add_relation(relation)
        self.add_entity(tail)
        triple = Triple(head, relation, tail)
        if triple in self.triples:
            return
        self.triples.add(triple)
        self._adjacency.setdefault(head, set()).add(triple)
        self._adjacency.setdefault(tail, set()).add(triple)
        self._by_relation.setdefault(relation, set()).add(triple)

    # -- lookups ------------------------------------------------------

    def incident(self, entity_id: str) -> frozenset[Triple]:
        """All triples touching the entity, in either direction."""
        return frozenset(self._adjacency.get(entity_id, ()))

    def with_relation(self, relation_id: str) -> frozenset[Triple]:
        return frozenset(self._by_relation.get(relation_id, ()))

    def entity_label(self, entity_id: str) -> str | None:
        info = self.entities.get(entity_id)
        return info.label if info else None

    def relation_label(self, relation_id: str) -> str | None:
        info = self.relations.get(relation_id)
        return info.label if info else None

    def __contains__(self, entity_id: str) -> bool:
        return entity_id in self.entities

    def __repr__(self) -> str:
        return (
            f"KnowledgeGraph(entities={len(self.entities)}, "
            f"relations={len(self.relations)}, triples={len(self.triples)})"
        )


def load_graph(triples_path: str | Path, labels_path: str | Path) -> KnowledgeGraph:
    """Load a graph from TSV triple and label files.

    Duplicate triple lines are deduplicated silently; ids appearing only in the
    triples file get entries without labels. Raises GraphLoadError with the line
    number on malformed input.
    """
    graph = KnowledgeGraph()
    triples_path = Path(triples_path)
    labels_path = Path(labels_path)

    with triples_path.open(encoding="utf-8") as handle:
        for line_no, raw in enumerate(handle, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            fields = line.split("\t")
            if len(fields) != 3 or not all(fields):
                raise GraphLoadError(triples_path, line_no, f"expected head<TAB>relation<TAB>tail, got {line!r}")
            graph.add_triple(*fields)

    with labels_path.open(encoding="utf-8") as handle:
        for line_no, raw in enumerate(handle, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            fields = line.split("\t")
            if len(fields) not in (2, 3) or not fields[0]:
                raise GraphLoadError(labels_path, line_no, f"expected id<TAB>label[<TAB>aliases], got {line!r}")
            item_id, label = fields[0], fields[1]
            aliases = [a for a in fields[2].split("|") if a] if len(fields) == 3 else []
            if item_id in graph.relations:
                graph.add_relation(item_id, label)
            else:
                graph.add_entity(item_id, label, aliases)
    return graph


def save_graph(graph: KnowledgeGraph, triples_path: str | Path, labels_path: str | Path) -> None:
    """Write a graph back to the TSV formats understood by load_graph; output is sorted."""
    with Path(triples_path).open("w", encoding="utf-8") as handle:
        for triple in sorted(graph.triples):
            handle.write(f"{triple.head}\t{triple.relation}\t{triple.tail}\n")
    with Path(labels_path).open("w", encoding="utf-8") as handle:
        labeled: list[tuple[str, str, list[str]]] = []
        for entity_id, info in graph.entities.items():
            if info.label is not None:
                labeled.append((entity_id, info.label, info.aliases))
        for relation_id, rel_info in graph.relations.items():
            if rel_info.label is not None:
                labeled.append((relation_id, rel_info.label, []))
        for item_id, label, aliases in sorted(labeled):
            if aliases:
                handle.write(f"{item_id}\t{label}\t{'|'.join(aliases)}\n")
            else:
                handle.write(f"{item_id}\t{label}\n")


def _copy_entity(dst: KnowledgeGraph, src: KnowledgeGraph, entity_id: str) -> None:
    info = src.entities[entity_id]
    dst.add_entity(entity_id, info.label, info.aliases)


def neighborhood(graph: KnowledgeGraph, seeds: Iterable[str], hops: int) -> KnowledgeGraph:
    """Subgraph of every triple reachable by an undirected walk of at most `hops` edges from any seed.

    Seeds are always present in the result, even when isolated; hops=0 returns
    the seeds alone. Labels are copied for all retained entities and relations.
    """
    if hops < 0:
        raise ValueError("hops must be non-negative")
    seed_set = set(seeds)
    unknown = seed_set - graph.entities.keys()
    if unknown:
        raise UnknownEntityError(unknown)

    sub = KnowledgeGraph()
    for seed in seed_set:
        _copy_entity(sub, graph, seed)

    visited = set(seed_set)
    frontier = seed_set
    for _ in range(hops):
        if not frontier:
            break
        next_frontier: set[str] = set()
        for node in frontier:
            for triple in graph.incident(node):
                if triple not in sub.triples:
                    sub.add_triple(*triple)
                    _copy_entity(sub, graph, triple.head)
                    _copy_entity(sub, graph, triple.tail)
                    sub.add_relation(triple.relation, graph.relation_label(triple.relation))
                for endpoint in (triple.head, triple.tail):
                    if endpoint not in visited:
                        visited.add(endpoint)
                        next_frontier.add(endpoint)
        frontier = next_frontier
    return sub


def sample_dataset_kg(graph: KnowledgeGraph, examples: Iterable, hops: int) -> KnowledgeGraph:
    """Union of `hops`-neighborhoods around every example's topic and answer entities.

    `examples` is any iterable of objects with `topic_entities` and
    `answer_entities` attributes. hops=1 and hops=2 produce the one- and
    two-hop dataset samples.
    """
    if hops not in (1, 2):
        raise ValueError("dataset sampling uses hops=1 or hops=2")
    seeds: set[str] = set()
    for example in examples:
        seeds.update(example.topic_entities)
        seeds.update(example.answer_entities)
    # BFS distance from a seed union is the minimum over per-example seed sets,
    # so one traversal equals the union of per-example neighborhoods.
    return neighborhood(graph, seeds, hops)


def verbalize_triple(graph: KnowledgeGraph, triple: Triple) -> str:
    """Render a triple as ``(head label, relation label, tail label)``; labels are emitted verbatim."""
    head_label = graph.entity_label(triple.head)
    relation_label = graph.relation_label(triple.relation)
    tail_label = graph.entity_label(triple.tail)
    for item_id, label in ((triple.head, head_label), (triple.relation, relation_label), (triple.tail, tail_label)):
        if label is None:
            raise MissingLabelError(item_id)
    return f"({head_label}, {relation_label}, {tail_label})"

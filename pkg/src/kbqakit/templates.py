"""Question templates: definitions, input gathering, instantiation, refinement.

Eight built-in templates (in Polish and English) turn knowledge-graph paths
into (question, answer set) pairs. Masked variants describe the answer through
a class or occupation instead of naming it; reverse variants put the answer in
the subject position of the query.
"""

from __future__ import annotations

import json
import logging
import random
import string
from dataclasses import dataclass, field, replace
from pathlib import Path

from .bgp import execute, parse_query
from .kg import KnowledgeGraph
from .text import lcs_length, tokenize

logger = logging.getLogger(__name__)

INSTANCE_OF = "P31"
OCCUPATION = "P106"

STATUS_UNVERIFIED = "unverified"
STATUS_CORRECT = "correct"
STATUS_INCORRECT = "incorrect"
STATUS_RESEMBLING = "resembling"
STATUSES = (STATUS_UNVERIFIED, STATUS_CORRECT, STATUS_INCORRECT, STATUS_RESEMBLING)

TECHNIQUES = ("n-hop", "reverse n-hop", "entity-mask", "mixed")


class TemplateError(ValueError):
    pass


class InstantiationError(TemplateError):
    pass


@dataclass(frozen=True)
class SlotSpec:
    name: str
    kind: str  # "entity" or "relation"


def _format_slots(template_text: str) -> set[str]:
    return {name for _, name, _, _ in string.Formatter().parse(template_text) if name}


@dataclass(frozen=True)
class QuestionTemplate:
    name: str
    nl_template: str
    sparql_template: str
    signature: tuple[SlotSpec, ...]
    technique: str

    def __post_init__(self):
        if self.technique not in TECHNIQUES:
            raise TemplateError(f"unknown technique {self.technique!r}")
        names = [slot.name for slot in self.signature]
        if len(set(names)) != len(names):
            raise TemplateError(f"duplicate slot names in {self.name}")
        nl_slots = _format_slots(self.nl_template)
        sparql_slots = _format_slots(self.sparql_template)
        if nl_slots != sparql_slots or nl_slots != set(names):
            raise TemplateError(
                f"slot mismatch in {self.name}: nl={sorted(nl_slots)} "
                f"sparql={sorted(sparql_slots)} signature={sorted(names)}"
            )

    def slots(self) -> set[str]:
        return {slot.name for slot in self.signature}

    def entity_inputs(self, inputs: dict[str, str]) -> set[str]:
        return {inputs[slot.name] for slot in self.signature if slot.kind == "entity"}


@dataclass(frozen=True)
class TemplateInstance:
    template: str
    inputs: dict[str, str]
    question_raw: str
    answers: frozenset[str]
    question_refined: str | None = None
    status: str = STATUS_UNVERIFIED
    refine_error: str | None = None

    @property
    def question(self) -> str:
        return self.question_refined or self.question_raw


_ENTITY = "entity"
_RELATION = "relation"


def _make(name, nl, sparql, slots, technique):
    return QuestionTemplate(name, nl, sparql, tuple(SlotSpec(n, k) for n, k in slots), technique)


def builtin_templates(language: str = "en") -> list[QuestionTemplate]:
    """The eight built-in templates in the requested language ("en" or "pl")."""
    if language not in ("en", "pl"):
        raise TemplateError(f"unsupported template language {language!r}")
    en = language == "en"
    return [
        _make(
            "one-hop",
            "What is the {relation} of {entity}?" if en else "Jakie {relation} ma {entity}?",
            "SELECT ?answerEntity WHERE {{ wd:{entity} wdt:{relation} ?answerEntity. }}",
            [("relation", _RELATION), ("entity", _ENTITY)],
            "n-hop",
        ),
        _make(
            "one-hop-with-mask",
            (
                "What was the name of the {mask}, which is the {relation} of {entity}?"
                if en
                else "Jak nazywał się {mask}, które jest {relation} {entity}?"
            ),
            "SELECT ?answerEntity WHERE {{ wd:{entity} wdt:{relation} ?answerEntity. "
            "?answerEntity wdt:P31 wd:{mask}. }}",
            [("mask", _ENTITY), ("relation", _RELATION), ("entity", _ENTITY)],
            "entity-mask",
        ),
        _make(
            "two-hop",
            (
                "What is the {relation2} of {entity}'s {relation1}?"
                if en
                else "Jakie {relation2} ma {relation1} {entity}?"
            ),
            "SELECT ?answerEntity WHERE {{ wd:{entity} wdt:{relation1} ?relatedEntity. "
            "?relatedEntity wdt:{relation2} ?answerEntity. }}",
            [("relation2", _RELATION), ("relation1", _RELATION), ("entity", _ENTITY)],
            "n-hop",
        ),
        _make(
            "reverse-one-hop",
            "Whose {relation} is {entity}?" if en else "Czyim {relation} jest {entity}?",
            "SELECT ?answerEntity WHERE {{ ?answerEntity wdt:{relation} wd:{entity}. }}",
            [("relation", _RELATION), ("entity", _ENTITY)],
            "reverse n-hop",
        ),
        _make(
            "reverse-one-hop-with-mask",
            (
                "What was the name of the {mask} whose {relation} is {entity}?"
                if en
                else "Jak nazywał się {mask}, którego {relation} jest {entity}?"
            ),
            "SELECT ?answerEntity WHERE {{ ?answerEntity wdt:{relation} wd:{entity}. "
            "?answerEntity wdt:P106 wd:{mask}. }}",
            [("mask", _ENTITY), ("relation", _RELATION), ("entity", _ENTITY)],
            "entity-mask",
        ),
        _make(
            "reverse-two-hop",
            (
                "Whose {relation1} is {entity1}, and {relation2} is {entity2}?"
                if en
                else "Czyim {relation1} jest {entity1}, a {relation2} jest {entity2}?"
            ),
            "SELECT ?answerEntity WHERE {{ ?answerEntity wdt:{relation1} wd:{entity1}. "
            "?answerEntity wdt:{relation2} wd:{entity2}. }}",
            [
                ("relation1", _RELATION),
                ("entity1", _ENTITY),
                ("relation2", _RELATION),
                ("entity2", _ENTITY),
            ],
            "reverse n-hop",
        ),
        _make(
            "reverse-two-hop-with-mask",
            (
                "What was the name of the {mask} whose {relation1} is {entity1}, "
                "and whose {relation2} is {entity2}?"
                if en
                else "Jak nazywał się {mask}, którego {relation1} jest {entity1}, "
                "a którego {relation2} jest {entity2}?"
            ),
            "SELECT ?answerEntity WHERE {{ ?answerEntity wdt:{relation1} wd:{entity1}. "
            "?answerEntity wdt:{relation2} wd:{entity2}. ?answerEntity wdt:P106 wd:{mask}. }}",
            [
                ("mask", _ENTITY),
                ("relation1", _RELATION),
                ("entity1", _ENTITY),
                ("relation2", _RELATION),
                ("entity2", _ENTITY),
            ],
            "entity-mask",
        ),
        _make(
            "mixed",
            (
                "What is the {relation2} of the {mask} whose {relation1} is {entity}?"
                if en
                else "Jakie {relation2} ma {mask}, którego {relation1} jest {entity}?"
            ),
            "SELECT ?answerEntity WHERE {{ ?relatedEntity wdt:P106 wd:{mask}. "
            "?relatedEntity wdt:{relation1} wd:{entity}. "
            "?relatedEntity wdt:{relation2} ?answerEntity. }}",
            [
                ("relation2", _RELATION),
                ("mask", _ENTITY),
                ("relation1", _RELATION),
                ("entity", _ENTITY),
            ],
            "mixed",
        ),
    ]


TEMPLATE_NAMES = tuple(template.name for template in builtin_templates())


def template_by_name(name: str, language: str = "en") -> QuestionTemplate:
    for template in builtin_templates(language):
        if template.name == name:
            return template
    raise TemplateError(f"unknown template {name!r}")


# -- input gathering ---------------------------------------------------


def _labeled_entity(graph: KnowledgeGraph, entity_id: str) -> bool:
    info = graph.entities.get(entity_id)
    return info is not None and bool(info.label)


def _labeled_relation(graph: KnowledgeGraph, relation_id: str) -> bool:
    info = graph.relations.get(relation_id)
    return info is not None and bool(info.label)


def _tails_of(graph: KnowledgeGraph, head: str, relation: str) -> list[str]:
    return sorted(t.tail for t in graph.incident(head) if t.head == head and t.relation == relation)


def _outgoing_by_head(graph: KnowledgeGraph) -> dict[str, list]:
    grouped: dict[str, list] = {}
    for triple in graph.triples:
        grouped.setdefault(triple.head, []).append(triple)
    return grouped


def _candidate_inputs(
    graph: KnowledgeGraph,
    template: QuestionTemplate,
    allowed_entities: set[str],
    allowed_relations: set[str],
) -> list[dict[str, str]]:
    def entity_ok(entity_id):
        return entity_id in allowed_entities and _labeled_entity(graph, entity_id)

    def relation_ok(relation_id):
        return relation_id in allowed_relations and _labeled_relation(graph, relation_id)

    out: list[dict[str, str]] = []
    by_head = _outgoing_by_head(graph)
    name = template.name

    if name == "one-hop":
        for triple in graph.triples:
            if entity_ok(triple.head) and relation_ok(triple.relation):
                out.append({"entity": triple.head, "relation": triple.relation})
    elif name == "one-hop-with-mask":
        for triple in graph.triples:
            if not (entity_ok(triple.head) and relation_ok(triple.relation)):
                continue
            for mask in _tails_of(graph, triple.tail, INSTANCE_OF):
                if entity_ok(mask):
                    out.append({"entity": triple.head, "relation": triple.relation, "mask": mask})
    elif name == "two-hop":
        for first in graph.triples:
            if not (entity_ok(first.head) and relation_ok(first.relation)):
                continue
            for second in by_head.get(first.tail, ()):
                if relation_ok(second.relation):
                    out.append(
                        {
                            "entity": first.head,
                            "relation1": first.relation,
                            "relation2": second.relation,
                        }
                    )
    elif name == "reverse-one-hop":
        for triple in graph.triples:
            if entity_ok(triple.tail) and relation_ok(triple.relation):
                out.append({"relation": triple.relation, "entity": triple.tail})
    elif name == "reverse-one-hop-with-mask":
        for triple in graph.triples:
            if not (entity_ok(triple.tail) and relation_ok(triple.relation)):
                continue
            for mask in _tails_of(graph, triple.head, OCCUPATION):
                if entity_ok(mask):
                    out.append({"relation": triple.relation, "entity": triple.tail, "mask": mask})
    elif name in ("reverse-two-hop", "reverse-two-hop-with-mask"):
        masked = name.endswith("with-mask")
        for subject, triples in by_head.items():
            pairs = sorted({(t.relation, t.tail) for t in triples})
            usable = [(r, o) for r, o in pairs if relation_ok(r) and entity_ok(o)]
            masks = [m for m in _tails_of(graph, subject, OCCUPATION) if entity_ok(m)] if masked else [None]
            for i, (r1, o1) in enumerate(usable):
                for r2, o2 in usable[i + 1 :]:
                    for mask in masks:
                        inputs = {"relation1": r1, "entity1": o1, "relation2": r2, "entity2": o2}
                        if mask is not None:
                            inputs["mask"] = mask
                        out.append(inputs)
    elif name == "mixed":
        for subject, triples in by_head.items():
            masks = [m for m in _tails_of(graph, subject, OCCUPATION) if entity_ok(m)]
            if not masks:
                continue
            pairs = sorted({(t.relation, t.tail) for t in triples})
            for mask in masks:
                for r1, o1 in pairs:
                    if (r1, o1) == (OCCUPATION, mask) or not (relation_ok(r1) and entity_ok(o1)):
                        continue
                    for r2, _ in pairs:
                        if relation_ok(r2):
                            out.append({"mask": mask, "relation1": r1, "entity": o1, "relation2": r2})
    else:
        raise TemplateError(f"no input gatherer for template {name!r}")

    unique = {tuple(sorted(inputs.items())): inputs for inputs in out}
    return [unique[key] for key in sorted(unique)]


def gather_inputs(
    graph: KnowledgeGraph,
    template: QuestionTemplate,
    allowed_entities: set[str],
    allowed_relations: set[str],
    limit: int,
    seed: int = 0,
) -> list[dict[str, str]]:
    """Finds up to `limit` slot assignments whose query has a non-empty answer.

    Candidates are enumerated exhaustively, shuffled under `seed`, and
    truncated, so a larger limit extends rather than reshuffles the selection.
    """
    if not allowed_entities or not allowed_relations:
        raise TemplateError("allowed entity and relation sets must be non-empty")
    if limit < 0:
        raise TemplateError("limit must be non-negative")
    candidates = _candidate_inputs(graph, template, allowed_entities, allowed_relations)
    rng = random.Random(seed)
    rng.shuffle(candidates)
    picked = []
    for inputs in candidates:
        if len(picked) >= limit:
            break
        query = parse_query(template.sparql_template.format(**inputs))
        if execute(graph, query):
            picked.append(inputs)
        else:
            logger.debug("unsatisfiable inputs for %s: %s", template.name, inputs)
    return picked


def instantiate(graph: KnowledgeGraph, template: QuestionTemplate, inputs: dict[str, str]) -> TemplateInstance:
    """Builds the question text and answer set for one slot assignment."""
    expected = template.slots()
    provided = set(inputs)
    if provided != expected:
        missing = sorted(expected - provided)
        extra = sorted(provided - expected)
        raise TemplateError(f"inputs do not match template {template.name}: missing={missing} extra={extra}")
    labels = {}
    for slot in template.signature:
        value = inputs[slot.name]
        if slot.kind == _ENTITY:
            labels[slot.name] = graph.entity_label(value)
        else:
            labels[slot.name] = graph.relation_label(value)
    question = template.nl_template.format(**labels)
    sparql = template.sparql_template.format(**inputs)
    answers = execute(graph, parse_query(sparql))
    if not answers:
        raise InstantiationError(f"empty answer set for {template.name} with inputs {inputs}")
    return TemplateInstance(template.name, dict(inputs), question, frozenset(answers))


def refine_question(instance: TemplateInstance, inflector, paraphraser) -> TemplateInstance:
    """Applies inflection correction then paraphrasing; failures leave the
    instance unrefined with the error recorded."""
    try:
        inflected = inflector.refine(instance.question_raw)
        refined = paraphraser.refine(inflected)
    except Exception as exc:
        logger.warning("refinement failed for %r: %s", instance.question_raw, exc)
        return replace(instance, question_refined=None, refine_error=str(exc))
    return replace(instance, question_refined=refined, refine_error=None)


def similarity_filter(original: str, refined: str, threshold: float = 0.6) -> bool:
    """True when the two texts share enough word-level structure to count as
    the same question: word LCS over the longer word count, case-folded."""
    words_a = [word.casefold() for word in tokenize(original)]
    words_b = [word.casefold() for word in tokenize(refined)]
    if not words_a or not words_b:
        raise ValueError("similarity_filter requires non-empty texts")
    ratio = lcs_length(words_a, words_b) / max(len(words_a), len(words_b))
    return ratio >= threshold


def set_status(instance: TemplateInstance, status: str) -> TemplateInstance:
    if status not in STATUSES:
        raise TemplateError(f"unknown status {status!r}")
    if instance.status != STATUS_UNVERIFIED and status != instance.status:
        raise TemplateError(f"cannot move status {instance.status!r} -> {status!r}")
    return replace(instance, status=status)


def tally_verification(instances: list[TemplateInstance]) -> dict[str, dict[str, int]]:
    """Counts instances per (template, status); every status key is present."""
    tally: dict[str, dict[str, int]] = {}
    for instance in instances:
        row = tally.setdefault(instance.template, {status: 0 for status in STATUSES})
        row[instance.status] += 1
    return tally


# -- serialization -----------------------------------------------------


def template_to_dict(template: QuestionTemplate) -> dict:
    return {
        "name": template.name,
        "nl_template": template.nl_template,
        "sparql_template": template.sparql_template,
        "signature": [[slot.name, slot.kind] for slot in template.signature],
        "technique": template.technique,
    }


def template_from_dict(row: dict) -> QuestionTemplate:
    return QuestionTemplate(
        row["name"],
        row["nl_template"],
        row["sparql_template"],
        tuple(SlotSpec(name, kind) for name, kind in row["signature"]),
        row["technique"],
    )


def save_templates(templates: list[QuestionTemplate], path: str | Path) -> None:
    rows = [template_to_dict(template) for template in templates]
    Path(path).write_text(json.dumps(rows, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")


def load_templates(path: str | Path) -> list[QuestionTemplate]:
    rows = json.loads(Path(path).read_text(encoding="utf-8"))
    return [template_from_dict(row) for row in rows]


def instance_to_dict(instance: TemplateInstance) -> dict:
    return {
        "template": instance.template,
        "inputs": dict(sorted(instance.inputs.items())),
        "question_raw": instance.question_raw,
        "question_refined": instance.question_refined,
        "answers": sorted(instance.answers),
        "status": instance.status,
        "refine_error": instance.refine_error,
    }


def instance_from_dict(row: dict) -> TemplateInstance:
    return TemplateInstance(
        row["template"],
        dict(row["inputs"]),
        row["question_raw"],
        frozenset(row["answers"]),
        row.get("question_refined"),
        row.get("status", STATUS_UNVERIFIED),
        row.get("refine_error"),
    )

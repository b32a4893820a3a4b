"""Two-stage human verification, agreement metrics, and dataset assembly.

Stage 1 judges (question, passage, answer fragment) triples with one of four
flags; stage 2 narrows candidate answer and topic entities to the accepted
subsets. Assembly routes the survivors into the retrieval, reading
comprehension, and knowledge-base QA datasets and cuts a seeded,
source-stratified train/test split.
"""

from __future__ import annotations

import hashlib
import logging
import math
import random
from dataclasses import dataclass, field

from .passages import Corpus
from .records import CandidateExample, IrExample, KbqaExample, MrcExample
from .text import normalize_question

logger = logging.getLogger(__name__)

FLAG_CORRECT = "correct"
FLAG_INCORRECT_QUESTION = "incorrect_question"
FLAG_INCORRECT_PASSAGE = "incorrect_passage"
FLAG_INCORRECT_FRAGMENT = "incorrect_fragment"
STAGE1_FLAGS = (FLAG_CORRECT, FLAG_INCORRECT_QUESTION, FLAG_INCORRECT_PASSAGE, FLAG_INCORRECT_FRAGMENT)

SUPER_ANNOTATOR = "super"

DEFAULT_TEST_FRACTION = 0.2


class VerificationError(ValueError):
    pass


class UnresolvedConflictError(VerificationError):
    def __init__(self, item_ids):
        self.item_ids = sorted(item_ids)
        super().__init__(f"conflicting decisions without a super-annotator override: {self.item_ids}")


@dataclass(frozen=True)
class Stage1Decision:
    item_id: str
    annotator_id: str
    flag: str
    timestamp: str = ""

    def __post_init__(self):
        if self.flag not in STAGE1_FLAGS:
            raise VerificationError(f"unknown stage-1 flag {self.flag!r}")

    def to_dict(self) -> dict:
        return {
            "item_id": self.item_id,
            "annotator_id": self.annotator_id,
            "flag": self.flag,
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_dict(cls, row: dict) -> "Stage1Decision":
        return cls(row["item_id"], row["annotator_id"], row["flag"], row.get("timestamp", ""))


@dataclass(frozen=True)
class Stage2Decision:
    item_id: str
    annotator_id: str
    accepted_answer_entities: frozenset[str]
    accepted_topic_entities: frozenset[str]
    rejected: bool = False
    timestamp: str = ""

    def __post_init__(self):
        object.__setattr__(self, "accepted_answer_entities", frozenset(self.accepted_answer_entities))
        object.__setattr__(self, "accepted_topic_entities", frozenset(self.accepted_topic_entities))
        if self.rejected and (self.accepted_answer_entities or self.accepted_topic_entities):
            raise VerificationError(f"rejected decision for {self.item_id} must accept nothing")

    def to_dict(self) -> dict:
        return {
            "item_id": self.item_id,
            "annotator_id": self.annotator_id,
            "accepted_answer_entities": sorted(self.accepted_answer_entities),
            "accepted_topic_entities": sorted(self.accepted_topic_entities),
            "rejected": self.rejected,
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_dict(cls, row: dict) -> "Stage2Decision":
        return cls(
            row["item_id"],
            row["annotator_id"],
            frozenset(row.get("accepted_answer_entities", [])),
            frozenset(row.get("accepted_topic_entities", [])),
            row.get("rejected", False),
            row.get("timestamp", ""),
        )


@dataclass
class Stage1Routing:
    ir_pass: list[CandidateExample] = field(default_factory=list)
    mrc_pass: list[CandidateExample] = field(default_factory=list)
    rejected: list[CandidateExample] = field(default_factory=list)


@dataclass
class VerifiedDatasets:
    kbqa: list[KbqaExample] = field(default_factory=list)
    mrc: list[MrcExample] = field(default_factory=list)
    ir: list[IrExample] = field(default_factory=list)
    corpus: Corpus = field(default_factory=Corpus)


@dataclass(frozen=True)
class Agreement:
    accuracy: float
    kappa: float | None  # None when expected agreement is 1 (degenerate)


def resolve_stage1(decisions: list[Stage1Decision], super_annotator: str = SUPER_ANNOTATOR) -> dict[str, str]:
    """One flag per item: unanimous decisions stand, the super-annotator's
    latest record overrides a conflict, and a conflict without an override
    raises."""
    by_item: dict[str, list[Stage1Decision]] = {}
    for decision in decisions:
        by_item.setdefault(decision.item_id, []).append(decision)
    resolved: dict[str, str] = {}
    unresolved = []
    for item_id, rows in by_item.items():
        overrides = [row for row in rows if row.annotator_id == super_annotator]
        if overrides:
            resolved[item_id] = overrides[-1].flag
            continue
        flags = {row.flag for row in rows}
        if len(flags) == 1:
            resolved[item_id] = rows[0].flag
        else:
            unresolved.append(item_id)
    if unresolved:
        raise UnresolvedConflictError(unresolved)
    return resolved


def apply_stage1(items: list[CandidateExample], flags: dict[str, str]) -> Stage1Routing:
    """Routes each item by its resolved flag: correct goes to both retrieval
    and reading comprehension (and on to stage 2); incorrect_fragment keeps
    the passage for retrieval only; the rest are rejected."""
    missing = [item.item_id for item in items if item.item_id not in flags]
    if missing:
        raise VerificationError(f"items without a stage-1 flag: {sorted(missing)}")
    routing = Stage1Routing()
    for item in items:
        flag = flags[item.item_id]
        if flag not in STAGE1_FLAGS:
            raise VerificationError(f"unknown stage-1 flag {flag!r} for {item.item_id}")
        if flag == FLAG_CORRECT:
            routing.ir_pass.append(item)
            routing.mrc_pass.append(item)
        elif flag == FLAG_INCORRECT_FRAGMENT:
            routing.ir_pass.append(item)
        else:
            routing.rejected.append(item)
    return routing


def resolve_stage2(
    decisions: list[Stage2Decision], super_annotator: str = SUPER_ANNOTATOR
) -> dict[str, Stage2Decision]:
    by_item: dict[str, list[Stage2Decision]] = {}
    for decision in decisions:
        by_item.setdefault(decision.item_id, []).append(decision)
    resolved: dict[str, Stage2Decision] = {}
    unresolved = []
    for item_id, rows in by_item.items():
        overrides = [row for row in rows if row.annotator_id == super_annotator]
        if overrides:
            resolved[item_id] = overrides[-1]
            continue
        agreed = all(
            row.accepted_answer_entities == rows[0].accepted_answer_entities
            and row.accepted_topic_entities == rows[0].accepted_topic_entities
            and row.rejected == rows[0].rejected
            for row in rows
        )
        if agreed:
            resolved[item_id] = rows[0]
        else:
            unresolved.append(item_id)
    if unresolved:
        raise UnresolvedConflictError(unresolved)
    return resolved


def apply_stage2(items: list[CandidateExample], resolved: dict[str, Stage2Decision]) -> list[KbqaExample]:
    """Keeps items whose decision accepts at least one answer entity and one
    topic entity; accepted sets must be subsets of the candidates."""
    missing = [item.item_id for item in items if item.item_id not in resolved]
    if missing:
        raise VerificationError(f"items without a stage-2 decision: {sorted(missing)}")
    out: list[KbqaExample] = []
    for item in items:
        decision = resolved[item.item_id]
        extra_answers = decision.accepted_answer_entities - item.answer_entities
        extra_topics = decision.accepted_topic_entities - item.topic_entities
        if extra_answers or extra_topics:
            raise VerificationError(
                f"decision for {item.item_id} accepts entities outside the candidate sets: "
                f"answers={sorted(extra_answers)} topics={sorted(extra_topics)}"
            )
        if decision.accepted_answer_entities and decision.accepted_topic_entities:
            out.append(
                KbqaExample(
                    item.item_id,
                    item.question,
                    set(decision.accepted_topic_entities),
                    set(decision.accepted_answer_entities),
                    item.source,
                )
            )
    return out


def agreement(
    decisions_a: dict[str, str], decisions_b: dict[str, str], on: set[str] | None = None
) -> Agreement:
    """Observed accuracy and chance-corrected agreement over the shared items.

    With expected agreement 1 (both annotators constant on the same class)
    kappa is undefined and reported as None."""
    shared = set(decisions_a) & set(decisions_b) if on is None else set(on)
    if not shared:
        raise VerificationError("no shared items to compare")
    missing = [item for item in shared if item not in decisions_a or item not in decisions_b]
    if missing:
        raise VerificationError(f"items not decided by both annotators: {sorted(missing)}")
    ordered = sorted(shared)
    labels_a = [decisions_a[item] for item in ordered]
    labels_b = [decisions_b[item] for item in ordered]
    n = len(ordered)
    observed = sum(1 for a, b in zip(labels_a, labels_b) if a == b) / n
    categories = set(labels_a) | set(labels_b)
    expected = sum((labels_a.count(c) / n) * (labels_b.count(c) / n) for c in categories)
    if math.isclose(expected, 1.0):
        return Agreement(observed, None)
    kappa = (observed - expected) / (1 - expected)
    return Agreement(observed, kappa)


def _dedupe_by_question(items: list, question_of) -> list:
    seen: set[str] = set()
    out = []
    for item in items:
        key = normalize_question(question_of(item))
        if key not in seen:
            seen.add(key)
            out.append(item)
    return out


def split_examples(
    examples: list, seed: int, test_fraction: float = DEFAULT_TEST_FRACTION, stratum_of=None
) -> tuple[list, list]:
    """Disjoint, exhaustive, seed-reproducible split; the test share is
    ceil(fraction * n) within each stratum."""
    if not (0 <= test_fraction <= 1):
        raise VerificationError("test_fraction must be in [0, 1]")
    strata: dict[str, list] = {}
    for example in examples:
        key = stratum_of(example) if stratum_of else ""
        strata.setdefault(key, []).append(example)
    train: list = []
    test: list = []
    for key in sorted(strata):
        members = sorted(strata[key], key=lambda ex: ex.item_id)
        digest = hashlib.sha256(f"{seed}:{key}".encode("utf-8")).digest()
        rng = random.Random(int.from_bytes(digest[:8], "big"))
        rng.shuffle(members)
        cut = math.ceil(test_fraction * len(members))
        test.extend(members[:cut])
        train.extend(members[cut:])
    return train, test


@dataclass
class AssembledDatasets:
    datasets: VerifiedDatasets
    train: VerifiedDatasets
    test: VerifiedDatasets


def assemble(
    routing: Stage1Routing,
    kbqa_examples: list[KbqaExample],
    corpus: Corpus,
    split_seed: int = 0,
    test_fraction: float = DEFAULT_TEST_FRACTION,
) -> AssembledDatasets:
    """Builds the three datasets from routed items, dropping duplicate
    questions from the reading-comprehension and KBQA sets (retrieval keeps
    every passing query), checks the size chain, and splits by source."""
    ir = [IrExample(item.item_id, item.question, item.passage_id) for item in routing.ir_pass]
    mrc_items = _dedupe_by_question(routing.mrc_pass, lambda item: item.question)
    mrc = [
        MrcExample(
            item.item_id,
            item.question,
            item.passage_id,
            item.passage_text,
            item.answer_text,
            item.answer_char_start,
            item.answer_char_end,
        )
        for item in mrc_items
    ]
    kbqa = _dedupe_by_question(kbqa_examples, lambda example: example.question)
    if not (len(ir) >= len(mrc) >= len(kbqa)):
        raise VerificationError(f"dataset size chain violated: ir={len(ir)} mrc={len(mrc)} kbqa={len(kbqa)}")

    datasets = VerifiedDatasets(kbqa, mrc, ir, corpus)
    sources = {item.item_id: item.source for item in routing.ir_pass}
    for example in kbqa_examples:
        sources.setdefault(example.item_id, example.source)

    def stratum(example) -> str:
        return sources.get(example.item_id, getattr(example, "source", ""))

    train = VerifiedDatasets(corpus=corpus)
    test = VerifiedDatasets(corpus=corpus)
    for name in ("kbqa", "mrc", "ir"):
        part_train, part_test = split_examples(
            getattr(datasets, name), split_seed, test_fraction, stratum
        )
        setattr(train, name, part_train)
        setattr(test, name, part_test)
    return AssembledDatasets(datasets, train, test)

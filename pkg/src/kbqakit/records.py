"""Dataset record types shared across pipeline stages, with line-delimited JSON IO."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

from .text import normalize_question

NATURAL = "natural"
TEMPLATE = "template"


def question_id(question: str) -> str:
    """Stable item id derived from the normalized question text."""
    digest = hashlib.sha256(normalize_question(question).encode("utf-8")).hexdigest()
    return f"q{digest[:12]}"


@dataclass
class CandidateExample:
    """A question with its candidate passage, tagged answer, and candidate entity sets."""

    item_id: str
    question: str
    source: str  # NATURAL or TEMPLATE
    passage_id: str
    passage_text: str
    answer_text: str
    answer_char_start: int
    answer_char_end: int
    answer_entities: set[str] = field(default_factory=set)
    topic_entities: set[str] = field(default_factory=set)

    def to_dict(self) -> dict:
        return {
            "item_id": self.item_id,
            "question": self.question,
            "source": self.source,
            "passage_id": self.passage_id,
            "passage_text": self.passage_text,
            "answer_text": self.answer_text,
            "answer_char_start": self.answer_char_start,
            "answer_char_end": self.answer_char_end,
            "answer_entities": sorted(self.answer_entities),
            "topic_entities": sorted(self.topic_entities),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CandidateExample":
        return cls(
            item_id=data["item_id"],
            question=data["question"],
            source=data["source"],
            passage_id=data["passage_id"],
            passage_text=data["passage_text"],
            answer_text=data["answer_text"],
            answer_char_start=data["answer_char_start"],
            answer_char_end=data["answer_char_end"],
            answer_entities=set(data.get("answer_entities", ())),
            topic_entities=set(data.get("topic_entities", ())),
        )


@dataclass
class KbqaExample:
    """Question with verified topic and answer entity sets."""

    item_id: str
    question: str
    topic_entities: set[str]
    answer_entities: set[str]
    source: str = NATURAL

    def to_dict(self) -> dict:
        return {
            "item_id": self.item_id,
            "question": self.question,
            "topic_entities": sorted(self.topic_entities),
            "answer_entities": sorted(self.answer_entities),
            "source": self.source,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "KbqaExample":
        return cls(
            item_id=data["item_id"],
            question=data["question"],
            topic_entities=set(data["topic_entities"]),
            answer_entities=set(data["answer_entities"]),
            source=data.get("source", NATURAL),
        )


@dataclass
class MrcExample:
    """Question with its passage and the exact answer span."""

    item_id: str
    question: str
    passage_id: str
    passage_text: str
    answer_text: str
    answer_char_start: int
    answer_char_end: int

    def to_dict(self) -> dict:
        return {
            "item_id": self.item_id,
            "question": self.question,
            "passage_id": self.passage_id,
            "passage_text": self.passage_text,
            "answer_text": self.answer_text,
            "answer_char_start": self.answer_char_start,
            "answer_char_end": self.answer_char_end,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MrcExample":
        return cls(**{key: data[key] for key in (
            "item_id", "question", "passage_id", "passage_text",
            "answer_text", "answer_char_start", "answer_char_end",
        )})


@dataclass
class IrExample:
    """Retrieval query paired with its relevant passage id."""

    item_id: str
    question: str
    passage_id: str

    def to_dict(self) -> dict:
        return {"item_id": self.item_id, "question": self.question, "passage_id": self.passage_id}

    @classmethod
    def from_dict(cls, data: dict) -> "IrExample":
        return cls(item_id=data["item_id"], question=data["question"], passage_id=data["passage_id"])


def write_jsonl(path: str | Path, rows: Iterable[dict]) -> int:
    """Write dict rows as line-delimited JSON; returns the row count."""
    count = 0
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as handle:
        for row in rows:
            handle.write(json.dumps(row, ensure_ascii=False, sort_keys=True) + "\n")
            count += 1
    return count


def read_jsonl(path: str | Path) -> Iterator[dict]:
    with Path(path).open(encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if line:
                yield json.loads(line)

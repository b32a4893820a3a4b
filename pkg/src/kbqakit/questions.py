"""Prefix extraction and suggestion-based completion of natural questions.

Seed questions are cut down to short prefixes (first 1..3 tokens, or the text
before the first named entity), and a suggestion provider expands each prefix
back into fully formed candidate questions.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

from .providers import NerProvider, SuggestProvider
from .records import question_id
from .text import normalize_question, normalize_whitespace

logger = logging.getLogger(__name__)

UP_TO_FIRST_NAMED_ENTITY = "up-to-first-named-entity"

DEFAULT_COMPLETIONS = 10


@dataclass(frozen=True)
class Prefix:
    text: str
    method: str  # "first-1", "first-2", "first-3", or "up-to-first-named-entity"
    source_question: str  # id of the question the prefix was cut from


@dataclass(frozen=True)
class CandidateQuestion:
    text: str
    prefix: Prefix
    provider: str
    response_index: int
    drifted: bool = False  # completion does not extend its prefix

    @property
    def provenance(self) -> str:
        return f"{self.provider}#{self.response_index}"


def extract_prefixes(question: str, ner_providers: list[NerProvider] | None = None) -> set[Prefix]:
    """First-1/2/3 token prefixes plus, per NER provider, the text before the
    first named entity. Prefixes with equal text collapse to one."""
    normalized = normalize_whitespace(question)
    if not normalized:
        raise ValueError("question must be non-empty")
    source = question_id(normalized)
    tokens = normalized.split(" ")
    by_text: dict[str, Prefix] = {}
    for k in (1, 2, 3):
        if len(tokens) >= k:
            text = " ".join(tokens[:k])
            by_text.setdefault(text, Prefix(text, f"first-{k}", source))
    for provider in ner_providers or []:
        spans = provider.spans(normalized)
        if not spans:
            continue
        first = min(spans, key=lambda span: span.start)
        text = normalized[: first.start].rstrip()
        if text:
            by_text.setdefault(text, Prefix(text, UP_TO_FIRST_NAMED_ENTITY, source))
    return set(by_text.values())


def complete_prefix(
    prefix: Prefix, suggest: SuggestProvider, max_completions: int = DEFAULT_COMPLETIONS
) -> list[CandidateQuestion]:
    """Expands one prefix through the suggestion provider, in provider order.

    Completions that do not extend the prefix are kept but flagged drifted;
    completions that collide after normalization are dropped. A provider
    failure yields an empty list."""
    try:
        completions = suggest.suggest(prefix.text, max_completions)
    except Exception as exc:
        logger.warning("suggestion provider %s failed on %r: %s", getattr(suggest, "name", "?"), prefix.text, exc)
        return []
    seen: set[str] = set()
    out: list[CandidateQuestion] = []
    folded_prefix = prefix.text.casefold()
    for index, completion in enumerate(completions[:max_completions]):
        text = normalize_whitespace(completion)
        if not text:
            continue
        key = normalize_question(text)
        if key in seen:
            continue
        seen.add(key)
        drifted = not text.casefold().startswith(folded_prefix)
        out.append(CandidateQuestion(text, prefix, getattr(suggest, "name", "suggest"), index, drifted))
    return out


def dedupe_candidates(candidates: list[CandidateQuestion]) -> list[CandidateQuestion]:
    """Keeps the first candidate per normalized question text, preserving order."""
    seen: set[str] = set()
    out: list[CandidateQuestion] = []
    for candidate in candidates:
        key = normalize_question(candidate.text)
        if key not in seen:
            seen.add(key)
            out.append(candidate)
    return out


__all__ = [
    "CandidateQuestion",
    "DEFAULT_COMPLETIONS",
    "Prefix",
    "UP_TO_FIRST_NAMED_ENTITY",
    "complete_prefix",
    "dedupe_candidates",
    "extract_prefixes",
    "normalize_question",
]

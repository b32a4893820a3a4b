"""Quote tagging and exact span grounding.

A QA provider returns a free-text quote for (question, passage). The quote is
then anchored to an exact character span of the passage: both sides are
lemmatized, candidate word windows are scored by longest common subsequence
against the quote lemmas, and the best window is mapped back to characters.
Hyperlinks intersecting the grounded span yield candidate answer entities.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from importlib import resources

from .passages import Passage
from .providers import LemmaProvider, LlmProvider, QaTagProvider
from .text import lcs_length, strip_token

logger = logging.getLogger(__name__)

DEFAULT_MIN_RATIO = 0.8

GROUNDED = "grounded"
FAILED = "failed"


class TaggingError(RuntimeError):
    pass


@dataclass(frozen=True)
class TaggedSpan:
    passage_id: str
    char_start: int
    char_end: int  # exclusive, offsets into the passage text
    word_start: int
    word_end: int  # exclusive, offsets into the passage words
    text: str


@dataclass(frozen=True)
class GroundingReport:
    quote: str
    matched_ratio: float
    status: str  # "grounded" or "failed"


def load_prompt(name: str) -> str:
    """Reads a bundled prompt template by file stem, e.g. "tag_prompt_en"."""
    return resources.files("kbqakit.assets").joinpath(f"{name}.txt").read_text(encoding="utf-8").rstrip("\n")


def build_tag_prompt(question: str, passage_text: str, language: str = "en") -> str:
    template = load_prompt(f"tag_prompt_{language}")
    return template.format(context=passage_text, question=question)


class LlmQaTagger:
    """QA tagging through a text-completion provider using the bundled prompt.

    The prompt scripts the model into answering with a bare quote followed by
    a closing double quote; the closing quote is stripped here."""

    def __init__(self, llm: LlmProvider, language: str = "en"):
        self.llm = llm
        self.language = language

    def tag(self, question: str, passage_text: str) -> str:
        raw = self.llm.complete(build_tag_prompt(question, passage_text, self.language))
        text = raw.strip()
        if text.endswith('"'):
            text = text[:-1]
        return text.strip()


class LlmRefiner:
    """Question rewriting through a text-completion provider and one of the
    bundled prompts ("inflect" or "paraphrase")."""

    def __init__(self, llm: LlmProvider, kind: str, language: str = "en"):
        if kind not in ("inflect", "paraphrase"):
            raise ValueError(f"unknown refiner kind {kind!r}")
        self.llm = llm
        self.template = load_prompt(f"{kind}_prompt_{language}")
        self.name = f"llm-{kind}"

    def refine(self, question: str) -> str:
        raw = self.llm.complete(self.template.format(question=question))
        return raw.strip().strip('"').strip()


def request_tag(question: str, passage: Passage, provider: QaTagProvider) -> str:
    """Returns the provider's quote for (question, passage) unmodified; empty
    or failing responses raise."""
    try:
        quote = provider.tag(question, passage.text)
    except Exception as exc:
        raise TaggingError(f"tagging failed for passage {passage.id}: {exc}") from exc
    if not quote or not quote.strip():
        raise TaggingError(f"empty tag for passage {passage.id}")
    logger.debug("tag for %s: %r", passage.id, quote)
    return quote


def _lemmas(words: list[str], lemmatizer: LemmaProvider) -> list[str]:
    return [lemmatizer.lemma(strip_token(word)) for word in words]


def _word_char_offsets(words: list[str]) -> list[int]:
    offsets = []
    position = 0
    for word in words:
        offsets.append(position)
        position += len(word) + 1
    return offsets


def ground_span(
    passage: Passage,
    quote: str,
    lemmatizer: LemmaProvider,
    min_ratio: float = DEFAULT_MIN_RATIO,
) -> tuple[TaggedSpan | None, GroundingReport]:
    """Anchors the quote to the passage word window with the highest
    lemma-level LCS, searching window lengths between half and twice the
    quote length. Ties prefer the shorter window, then the earlier start.
    Grounding succeeds when matched lemmas / quote lemmas >= min_ratio."""
    quote_words = quote.split()
    if not quote_words:
        raise ValueError("quote must be non-empty")
    words = passage.words
    quote_lemmas = _lemmas(quote_words, lemmatizer)
    passage_lemmas = _lemmas(words, lemmatizer)
    q = len(quote_lemmas)
    total = len(words)

    best: tuple[int, int, int] | None = None  # (lcs, length, start)
    low = max(1, math.ceil(0.5 * q))
    high = min(2 * q, total)
    for length in range(low, high + 1):
        for start in range(0, total - length + 1):
            score = lcs_length(quote_lemmas, passage_lemmas[start : start + length])
            if best is None or score > best[0]:
                best = (score, length, start)

    if best is None:  # passage shorter than the minimum window
        report = GroundingReport(quote, 0.0, FAILED)
        return None, report
    score, length, start = best
    ratio = score / q
    if ratio < min_ratio:
        return None, GroundingReport(quote, ratio, FAILED)

    offsets = _word_char_offsets(words)
    char_start = offsets[start]
    last_word = words[start + length - 1]
    char_end = offsets[start + length - 1] + len(last_word)
    text = passage.text[char_start:char_end]
    span = TaggedSpan(passage.id, char_start, char_end, start, start + length, text)
    assert span.text == passage.text[span.char_start : span.char_end]
    return span, GroundingReport(quote, ratio, GROUNDED)


def extract_answer_entities(passage: Passage, span: TaggedSpan) -> set[str]:
    """Target entities of all passage links whose word span intersects the
    grounded span."""
    found = set()
    for link in passage.links:
        if link.target_entity and link.word_start < span.word_end and link.word_end > span.word_start:
            found.add(link.target_entity)
    return found

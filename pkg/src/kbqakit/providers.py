"""Provider contracts for external services, plus rule-based and replay implementations.

Every stage that touches the outside world (suggestion completion, web search,
article fetch, reranking, QA tagging, NLP annotation, embeddings, LLM refine)
goes through one of these interfaces. Live HTTP clients live in `webclients`;
tests and the bundled fixture pipeline use the replay and rule-based
implementations below.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Protocol, runtime_checkable

from .text import normalize_question, normalize_whitespace, tokenize

if TYPE_CHECKING:
    from .passages import Article

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class NerSpan:
    text: str
    start: int  # char offsets into the (whitespace-normalized) input
    end: int


@dataclass(frozen=True)
class PosToken:
    text: str
    pos: str  # UPOS-style tag: NOUN, ADJ, PROPN, X, ...
    index: int


@dataclass(frozen=True)
class SearchResult:
    title: str
    url: str
    rank: int = 0


@dataclass(frozen=True)
class WikiHit:
    title: str
    entity_id: str | None = None


# -- contracts ---------------------------------------------------------


@runtime_checkable
class SuggestProvider(Protocol):
    name: str

    def suggest(self, prefix: str, limit: int) -> list[str]: ...


@runtime_checkable
class NerProvider(Protocol):
    name: str

    def spans(self, text: str) -> list[NerSpan]: ...


@runtime_checkable
class PosProvider(Protocol):
    def tokens(self, text: str) -> list[PosToken]: ...


@runtime_checkable
class LemmaProvider(Protocol):
    def lemma(self, word: str) -> str: ...


@runtime_checkable
class DependencyProvider(Protocol):
    def children(self, text: str) -> list[list[int]]:
        """Child token indices per token, aligned with whitespace tokenization."""
        ...


@runtime_checkable
class QaTagProvider(Protocol):
    def tag(self, question: str, passage_text: str) -> str: ...


@runtime_checkable
class RerankProvider(Protocol):
    def score(self, question: str, texts: list[str]) -> list[float]: ...


@runtime_checkable
class ArticleSearchProvider(Protocol):
    def search(self, question: str) -> list[SearchResult]: ...


@runtime_checkable
class ArticleFetchProvider(Protocol):
    def fetch(self, title: str) -> "Article | None": ...


@runtime_checkable
class WikiSearchProvider(Protocol):
    def search(self, query: str) -> list[WikiHit]: ...


@runtime_checkable
class EmbedProvider(Protocol):
    def embed(self, texts: list[str]) -> list[list[float]]: ...


@runtime_checkable
class RefineProvider(Protocol):
    name: str

    def refine(self, question: str) -> str: ...


@runtime_checkable
class LlmProvider(Protocol):
    def complete(self, prompt: str) -> str: ...


# -- rule-based implementations ---------------------------------------


class IdentityLemmatizer:
    """Surface forms as their own lemmas; the language-neutral floor."""

    def lemma(self, word: str) -> str:
        return word


class DictionaryLemmatizer:
    """Lemma lookup in a fixed table; unknown words fall back to themselves."""

    def __init__(self, table: dict[str, str]):
        self.table = {key.casefold(): value for key, value in table.items()}

    def lemma(self, word: str) -> str:
        return self.table.get(word.casefold(), word)

    @classmethod
    def from_json(cls, path: str | Path) -> "DictionaryLemmatizer":
        return cls(json.loads(Path(path).read_text(encoding="utf-8")))


class CapitalizedNer:
    """Marks maximal runs of capitalized tokens, ignoring the sentence-initial token."""

    name = "capitalized-ner"

    def spans(self, text: str) -> list[NerSpan]:
        normalized = normalize_whitespace(text)
        spans: list[NerSpan] = []
        offset = 0
        run_start: int | None = None
        run_end = 0
        for index, token in enumerate(normalized.split(" ") if normalized else []):
            is_candidate = index > 0 and token[:1].isupper()
            if is_candidate and run_start is None:
                run_start = offset
            if is_candidate:
                run_end = offset + len(token)
            elif run_start is not None:
                spans.append(NerSpan(normalized[run_start:run_end], run_start, run_end))
                run_start = None
            offset += len(token) + 1
        if run_start is not None:
            spans.append(NerSpan(normalized[run_start:run_end], run_start, run_end))
        return spans


_DEFAULT_FUNCTION_WORDS = frozenset(
    "a an the of in on at by for with to from is are was were who what when where which whose how "
    "did does do and or not it its his her their as that this".split()
)


class RuleBasedPos:
    """Heuristic tagger: capitalized mid-sentence tokens are PROPN, function words are
    excluded (ADP), listed adjectives are ADJ, everything else is NOUN."""

    def __init__(self, adjectives: set[str] | None = None, function_words: frozenset[str] = _DEFAULT_FUNCTION_WORDS):
        self.adjectives = {word.casefold() for word in (adjectives or set())}
        self.function_words = function_words

    def tokens(self, text: str) -> list[PosToken]:
        result: list[PosToken] = []
        for index, word in enumerate(tokenize(text)):
            bare = word.strip("?!.,;:\"'")
            folded = bare.casefold()
            if not bare:
                tag = "PUNCT"
            elif folded in self.function_words:
                tag = "ADP"
            elif index > 0 and bare[:1].isupper():
                tag = "PROPN"
            elif folded in self.adjectives:
                tag = "ADJ"
            else:
                tag = "NOUN"
            result.append(PosToken(bare, tag, index))
        return result


class OverlapReranker:
    """Scores a passage by the fraction of question tokens it contains."""

    def score(self, question: str, texts: list[str]) -> list[float]:
        question_tokens = {token.casefold().strip("?!.,;:\"'") for token in tokenize(question)}
        question_tokens.discard("")
        scores = []
        for text in texts:
            passage_tokens = {token.casefold().strip("?!.,;:\"'") for token in tokenize(text)}
            hit = len(question_tokens & passage_tokens)
            scores.append(hit / len(question_tokens) if question_tokens else 0.0)
        return scores


class HashedBowEmbedder:
    """Deterministic bag-of-words hashing embedder; cosine-ready unit vectors."""

    def __init__(self, dim: int = 256):
        self.dim = dim

    def embed(self, texts: list[str]) -> list[list[float]]:
        vectors = []
        for text in texts:
            vector = [0.0] * self.dim
            for token in tokenize(text):
                folded = token.casefold().strip("?!.,;:\"'()")
                if folded:
                    vector[hash_bucket(folded, self.dim)] += 1.0
            norm = math.sqrt(sum(value * value for value in vector))
            if norm > 0:
                vector = [value / norm for value in vector]
            vectors.append(vector)
        return vectors


def hash_bucket(token: str, dim: int) -> int:
    import hashlib

    digest = hashlib.sha256(token.encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "big") % dim


class IdentityRefine:
    name = "identity-refine"

    def refine(self, question: str) -> str:
        return question


# -- replay implementations -------------------------------------------


def _load_mapping(path: str | Path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


class ReplaySuggest:
    """Replays canned completions keyed by exact prefix text."""

    def __init__(self, mapping: dict[str, list[str]], name: str = "replay-suggest"):
        self.mapping = mapping
        self.name = name

    def suggest(self, prefix: str, limit: int) -> list[str]:
        return list(self.mapping.get(prefix, ()))[:limit]

    @classmethod
    def from_json(cls, path: str | Path) -> "ReplaySuggest":
        return cls(_load_mapping(path))


class ReplayArticleSearch:
    """Replays ranked search results keyed by normalized question."""

    def __init__(self, mapping: dict[str, list[dict]]):
        self.mapping = mapping

    def search(self, question: str) -> list[SearchResult]:
        rows = self.mapping.get(normalize_question(question), ())
        return [SearchResult(row["title"], row["url"], rank=i + 1) for i, row in enumerate(rows)]

    @classmethod
    def from_json(cls, path: str | Path) -> "ReplayArticleSearch":
        return cls(_load_mapping(path))


class ReplayArticleFetcher:
    """Replays article payloads keyed by exact title."""

    name = "replay-fetch"

    def __init__(self, mapping: dict[str, dict]):
        self.mapping = mapping

    def fetch(self, title: str) -> "Article | None":
        row = self.mapping.get(title)
        if row is None:
            return None
        from .passages import Article

        return Article.from_dict(row)

    @classmethod
    def from_json(cls, path: str | Path) -> "ReplayArticleFetcher":
        return cls(_load_mapping(path))


class ReplayWikiSearch:
    """Replays wiki search hits keyed by case-folded query."""

    def __init__(self, mapping: dict[str, list[dict]]):
        self.mapping = {key.casefold(): value for key, value in mapping.items()}

    def search(self, query: str) -> list[WikiHit]:
        rows = self.mapping.get(normalize_whitespace(query).casefold(), ())
        return [WikiHit(row["title"], row.get("entity_id")) for row in rows]

    @classmethod
    def from_json(cls, path: str | Path) -> "ReplayWikiSearch":
        return cls(_load_mapping(path))


class ReplayQaTagger:
    """Replays quote responses keyed by normalized question."""

    def __init__(self, mapping: dict[str, str]):
        self.mapping = mapping

    def tag(self, question: str, passage_text: str) -> str:
        return self.mapping.get(normalize_question(question), "")

    @classmethod
    def from_json(cls, path: str | Path) -> "ReplayQaTagger":
        return cls(_load_mapping(path))


class ReplayRefine:
    """Replays refined question text; unknown questions pass through unchanged."""

    def __init__(self, mapping: dict[str, str], name: str = "replay-refine"):
        self.mapping = mapping
        self.name = name

    def refine(self, question: str) -> str:
        return self.mapping.get(question, question)

    @classmethod
    def from_json(cls, path: str | Path) -> "ReplayRefine":
        return cls(_load_mapping(path))


class FailingProvider:
    """Always raises; stands in for an unavailable external service."""

    name = "failing"

    def __getattr__(self, _name: str):
        def _raise(*_args, **_kwargs):
            raise RuntimeError("provider unavailable")

        return _raise


class ProviderError(RuntimeError):
    """Wraps a provider failure with the provider's name."""

    def __init__(self, provider: str, cause: Exception):
        super().__init__(f"provider {provider} failed: {cause}")
        self.provider = provider
        self.cause = cause

"""Article retrieval, sliding-window segmentation, reranking, corpus assembly.

Articles arrive as pre-tokenized word lists with hyperlink spans. Each article
is cut into overlapping windows (120 words, step 60 by default); a reranker
orders the windows per question and the best one becomes the question's
candidate passage. The retrieval corpus keeps every window except those
overlapping a passage selected into the dataset.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from urllib.parse import urlparse

from .providers import ArticleSearchProvider, RerankProvider, SearchResult

logger = logging.getLogger(__name__)

WINDOW_WORDS = 120
STEP_WORDS = 60
TOP_RESULTS = 10


@dataclass(frozen=True)
class Link:
    word_start: int
    word_end: int  # exclusive
    target_entity: str | None
    target_title: str


@dataclass(frozen=True)
class Article:
    title: str
    page_id: str
    words: tuple[str, ...]
    links: tuple[Link, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "words", tuple(self.words))
        object.__setattr__(self, "links", tuple(self.links))
        for link in self.links:
            if not (0 <= link.word_start < link.word_end <= len(self.words)):
                raise ValueError(f"link span [{link.word_start},{link.word_end}) outside article {self.page_id}")

    def to_dict(self) -> dict:
        return {
            "title": self.title,
            "page_id": self.page_id,
            "words": list(self.words),
            "links": [[l.word_start, l.word_end, l.target_entity, l.target_title] for l in self.links],
        }

    @classmethod
    def from_dict(cls, row: dict) -> "Article":
        links = tuple(Link(a, b, entity, title) for a, b, entity, title in row.get("links", []))
        return cls(row["title"], row["page_id"], tuple(row["words"]), links)


@dataclass(frozen=True)
class Passage:
    id: str  # "<page_id>:<word_start>"
    page_id: str
    article_title: str
    word_start: int  # offsets into the source article
    word_end: int
    text: str
    links: tuple[Link, ...] = ()  # word offsets local to the passage

    @property
    def words(self) -> list[str]:
        return self.text.split(" ") if self.text else []

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "page_id": self.page_id,
            "article_title": self.article_title,
            "word_start": self.word_start,
            "word_end": self.word_end,
            "text": self.text,
            "links": [[l.word_start, l.word_end, l.target_entity, l.target_title] for l in self.links],
        }

    @classmethod
    def from_dict(cls, row: dict) -> "Passage":
        links = tuple(Link(a, b, entity, title) for a, b, entity, title in row.get("links", []))
        return cls(
            row["id"],
            row["page_id"],
            row["article_title"],
            row["word_start"],
            row["word_end"],
            row["text"],
            links,
        )


@dataclass
class Corpus:
    passages: dict[str, Passage] = field(default_factory=dict)
    tombstones: set[str] = field(default_factory=set)


def is_wiki_url(url: str) -> bool:
    parsed = urlparse(url)
    host = parsed.netloc.casefold()
    return host.endswith("wikipedia.org") or "/wiki/" in parsed.path


def find_articles(question: str, search: ArticleSearchProvider) -> list[SearchResult]:
    """The wiki articles among the provider's top results, in rank order.

    An empty list means the question carries no usable article and is
    discarded downstream. Provider failures degrade to an empty list."""
    try:
        results = search.search(question)
    except Exception as exc:
        logger.warning("article search failed for %r: %s", question, exc)
        return []
    return [result for result in results[:TOP_RESULTS] if is_wiki_url(result.url)]


def segment(article: Article, window: int = WINDOW_WORDS, step: int = STEP_WORDS) -> list[Passage]:
    """Sliding windows over the article words; a tail window whose range sits
    inside the previously emitted one is dropped."""
    if window <= 0:
        raise ValueError("window must be positive")
    if not (0 < step <= window):
        raise ValueError("step must be in (0, window]")
    total = len(article.words)
    passages: list[Passage] = []
    previous: tuple[int, int] | None = None
    for start in range(0, total, step):
        end = min(start + window, total)
        if previous is not None and previous[0] <= start and end <= previous[1]:
            continue
        links = tuple(
            Link(
                max(link.word_start, start) - start,
                min(link.word_end, end) - start,
                link.target_entity,
                link.target_title,
            )
            for link in article.links
            if link.word_start < end and link.word_end > start
        )
        passages.append(
            Passage(
                f"{article.page_id}:{start}",
                article.page_id,
                article.title,
                start,
                end,
                " ".join(article.words[start:end]),
                links,
            )
        )
        previous = (start, end)
    return passages


def rank_passages(
    question: str, passages: list[Passage], reranker: RerankProvider
) -> list[tuple[Passage, float]]:
    """Stable descending sort of the passages by reranker score; the first
    element is the question's candidate passage."""
    if not passages:
        return []
    scores = reranker.score(question, [passage.text for passage in passages])
    if len(scores) != len(passages):
        raise ValueError(f"reranker returned {len(scores)} scores for {len(passages)} passages")
    for value in scores:
        if not math.isfinite(value):
            raise ValueError("reranker returned a non-finite score")
    order = sorted(range(len(passages)), key=lambda i: -scores[i])
    return [(passages[i], scores[i]) for i in order]


def _overlaps(a: Passage, b: Passage) -> bool:
    return a.page_id == b.page_id and a.word_start < b.word_end and b.word_start < a.word_end


def build_corpus(all_passages: list[Passage], selected: list[Passage]) -> Corpus:
    """Keeps the selected passages and every non-selected passage that does
    not overlap (same article, intersecting word range) any selected one."""
    corpus = Corpus()
    selected_by_page: dict[str, list[Passage]] = {}
    for passage in selected:
        selected_by_page.setdefault(passage.page_id, []).append(passage)
        corpus.passages[passage.id] = passage
    for passage in all_passages:
        if passage.id in corpus.passages:
            continue
        if any(_overlaps(passage, chosen) for chosen in selected_by_page.get(passage.page_id, ())):
            corpus.tombstones.add(passage.id)
            continue
        corpus.passages[passage.id] = passage
    return corpus


def corpus_export_rows(corpus: Corpus) -> list[dict]:
    """Line-record export shape: id, title, text, sorted by id."""
    return [
        {"id": passage.id, "title": passage.article_title, "text": passage.text}
        for _, passage in sorted(corpus.passages.items())
    ]

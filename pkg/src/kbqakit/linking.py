"""Heuristic topic-entity linking.

Four candidate sets are produced for a question: entities whose page title
closely matches a token's lemma (exact), search hits landing in the question
neighborhood for plain tokens (nbhd) and for named entities (named), and hits
for two-word queries built from a noun and its dependency children (comb).
The question neighborhood is the set of pages behind the question's top
search results plus the first five links of each.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from .passages import find_articles
from .providers import (
    ArticleFetchProvider,
    ArticleSearchProvider,
    DependencyProvider,
    LemmaProvider,
    NerProvider,
    PosProvider,
    WikiHit,
    WikiSearchProvider,
)
from .text import common_prefix_length, lcs_length, normalize_whitespace

logger = logging.getLogger(__name__)

POS_FILTER = ("NOUN", "ADJ", "PROPN", "X")  # noun, adjective, proper noun, unknown
DEFAULT_SIM_THRESHOLD = 0.85
FIRST_LINKS = 5
SEARCH_CAP = 10


def _norm_title(title: str) -> str:
    return normalize_whitespace(title).casefold()


@dataclass
class QuestionNeighborhood:
    entity_ids: set[str] = field(default_factory=set)
    titles: set[str] = field(default_factory=set)  # normalized

    @property
    def pages(self) -> frozenset[str]:
        return frozenset(self.entity_ids | self.titles)

    def add(self, title: str | None = None, entity_id: str | None = None) -> None:
        if entity_id:
            self.entity_ids.add(entity_id)
        if title:
            self.titles.add(_norm_title(title))

    def contains(self, hit: WikiHit) -> bool:
        if hit.entity_id and hit.entity_id in self.entity_ids:
            return True
        return _norm_title(hit.title) in self.titles

    def __len__(self) -> int:
        return len(self.pages)


@dataclass(frozen=True)
class LinkedEntities:
    exact: frozenset[str]
    nbhd: frozenset[str]
    named: frozenset[str]
    comb: frozenset[str]

    def all(self) -> frozenset[str]:
        return self.exact | self.nbhd | self.named | self.comb


def build_neighborhood(
    question: str, search: ArticleSearchProvider, fetch: ArticleFetchProvider
) -> QuestionNeighborhood:
    """Pages behind the question's top wiki search results, plus the first
    five links of each page. Fetch failures skip that page."""
    nbhd = QuestionNeighborhood()
    for result in find_articles(question, search):
        nbhd.add(title=result.title)
        try:
            article = fetch.fetch(result.title)
        except Exception as exc:
            logger.warning("article fetch failed for %r: %s", result.title, exc)
            continue
        if article is None:
            continue
        ordered = sorted(article.links, key=lambda link: (link.word_start, link.word_end))
        for link in ordered[:FIRST_LINKS]:
            nbhd.add(title=link.target_title, entity_id=link.target_entity)
    return nbhd


def title_similarity(a: str, b: str) -> float:
    """max(character LCS, common prefix) over the longer length, case-folded."""
    a = a.casefold()
    b = b.casefold()
    longest = max(len(a), len(b))
    if longest == 0:
        return 1.0
    lcs = lcs_length(a, b)
    prefix = common_prefix_length(a, b)
    return max(lcs, prefix) / longest


def _search(search: WikiSearchProvider, query: str) -> list[WikiHit]:
    try:
        return search.search(query)[:SEARCH_CAP]
    except Exception as exc:
        logger.warning("wiki search failed for %r: %s", query, exc)
        return []


def link_entities(
    question: str,
    pos: PosProvider,
    ner: NerProvider,
    lemma: LemmaProvider,
    dep: DependencyProvider | None,
    search: WikiSearchProvider,
    nbhd: QuestionNeighborhood,
    sim_threshold: float = DEFAULT_SIM_THRESHOLD,
) -> LinkedEntities:
    """Runs the four linking passes over the question tokens.

    Without a dependency provider, a noun's "children" fall back to the
    immediately adjacent tokens."""
    if not (0 < sim_threshold <= 1):
        raise ValueError("sim_threshold must be in (0, 1]")
    tokens = [token for token in pos.tokens(question) if token.text]
    filtered = [token for token in tokens if token.pos in POS_FILTER]
    results = {token.text: _search(search, token.text) for token in filtered}

    exact: set[str] = set()
    nbhd_set: set[str] = set()
    named: set[str] = set()
    comb: set[str] = set()

    for token in filtered:
        token_lemma = lemma.lemma(token.text)
        for hit in results[token.text]:
            if hit.entity_id and title_similarity(hit.title, token_lemma) >= sim_threshold:
                exact.add(hit.entity_id)

    for span in ner.spans(question):
        for hit in _search(search, span.text):
            if hit.entity_id and nbhd.contains(hit):
                named.add(hit.entity_id)

    for token in filtered:
        for hit in results[token.text]:
            if hit.entity_id and nbhd.contains(hit):
                nbhd_set.add(hit.entity_id)

    if dep is not None:
        children_of = dep.children(question)
    else:
        children_of = None
    by_index = {token.index: token for token in tokens}
    for token in tokens:
        if token.pos != "NOUN":
            continue
        if children_of is not None:
            child_indices = children_of[token.index] if token.index < len(children_of) else []
        else:
            child_indices = [token.index - 1, token.index + 1]
        children = [by_index[i] for i in child_indices if i in by_index]
        related = [child for child in children if child.pos == "NOUN"]
        adjectives = [child for child in children if child.pos == "ADJ"]
        for other in related + adjectives:
            query = f"{other.text} {token.text}"
            for hit in _search(search, query):
                if hit.entity_id and nbhd.contains(hit):
                    comb.add(hit.entity_id)

    return LinkedEntities(frozenset(exact), frozenset(nbhd_set), frozenset(named), frozenset(comb))

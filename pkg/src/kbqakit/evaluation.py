"""Metrics and baselines: KBQA answer-inclusion accuracy, reading
comprehension EM/F1, ranked-retrieval metrics, BM25, and embedding-based
triple retrieval with prompt assembly for KG-augmented answering."""

from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

from .kg import KnowledgeGraph, MissingLabelError, neighborhood, verbalize_triple
from .providers import EmbedProvider
from .records import KbqaExample
from .text import normalize_answer

logger = logging.getLogger(__name__)

BM25_K1 = 1.2
BM25_B = 0.75
DEFAULT_TOP = 100
DEFAULT_TRIPLES = 40


@dataclass(frozen=True)
class KbqaGold:
    question_id: str
    answers: dict[str, str]  # entity id -> label (aliases deliberately excluded)

    def __post_init__(self):
        if not self.answers:
            raise ValueError(f"gold for {self.question_id} has no answers")
        for entity_id, label in self.answers.items():
            if not label:
                raise ValueError(f"gold label for {entity_id} is empty")


@dataclass(frozen=True)
class Ranking:
    query_id: str
    entries: tuple[tuple[str, float], ...]  # (passage id, score), best first

    def __post_init__(self):
        ids = [passage_id for passage_id, _ in self.entries]
        if len(ids) != len(set(ids)):
            raise ValueError(f"ranking for {self.query_id} repeats a passage id")

    def ids(self) -> list[str]:
        return [passage_id for passage_id, _ in self.entries]


@dataclass(frozen=True)
class RetrievedContext:
    triples: tuple[tuple[str, float], ...]  # (verbalized triple, similarity), best first


@dataclass(frozen=True)
class MrcScores:
    exact_match: float
    f1: float


def gold_from_examples(examples: list[KbqaExample], graph: KnowledgeGraph) -> list[KbqaGold]:
    """Gold answer labels per question, from the graph's primary labels only."""
    out = []
    for example in examples:
        answers = {entity_id: graph.entity_label(entity_id) for entity_id in sorted(example.answer_entities)}
        out.append(KbqaGold(example.item_id, answers))
    return out


def kbqa_accuracy(responses: dict[str, str], gold: list[KbqaGold]) -> float:
    """Mean over questions of the fraction of gold labels contained in the
    response, matched as case-insensitive substrings. A missing response
    contributes zero for that question."""
    if not gold:
        raise ValueError("no gold answers to score")
    total = 0.0
    for item in gold:
        response = responses.get(item.question_id, "").casefold()
        included = sum(1 for label in item.answers.values() if label.casefold() in response)
        total += included / len(item.answers)
    return total / len(gold)


def _answer_tokens(text: str) -> list[str]:
    normalized = normalize_answer(text)
    return normalized.split(" ") if normalized else []


def _f1(prediction: str, gold: str) -> float:
    pred_tokens = _answer_tokens(prediction)
    gold_tokens = _answer_tokens(gold)
    if not pred_tokens or not gold_tokens:
        return 1.0 if pred_tokens == gold_tokens else 0.0
    overlap = sum((Counter(pred_tokens) & Counter(gold_tokens)).values())
    if overlap == 0:
        return 0.0
    precision = overlap / len(pred_tokens)
    recall = overlap / len(gold_tokens)
    return 2 * precision * recall / (precision + recall)


def mrc_scores(predictions: dict[str, str], golds: dict[str, str]) -> MrcScores:
    """Exact match on normalized strings and token-bag F1, both averaged."""
    if not golds:
        raise ValueError("no gold answers to score")
    missing = sorted(set(golds) - set(predictions))
    if missing:
        raise ValueError(f"missing predictions for: {missing}")
    em_total = 0.0
    f1_total = 0.0
    for item_id, gold in golds.items():
        prediction = predictions[item_id]
        em_total += float(normalize_answer(prediction) == normalize_answer(gold))
        f1_total += _f1(prediction, gold)
    n = len(golds)
    return MrcScores(em_total / n, f1_total / n)


def ir_metrics(
    rankings: dict[str, Ranking], qrels: dict[str, set[str]], k_values: list[int]
) -> dict[str, float]:
    """NDCG@k (log2 discount), MRR@k, and Recall@k with binary relevance,
    macro-averaged over the queries in the qrels. A query without a ranking
    counts as all-miss."""
    if not qrels:
        raise ValueError("no relevance judgments")
    for query_id, relevant in qrels.items():
        if not relevant:
            raise ValueError(f"query {query_id} has no relevant passages")
    out: dict[str, float] = {}
    for k in k_values:
        ndcg_total = mrr_total = recall_total = 0.0
        for query_id, relevant in qrels.items():
            ranking = rankings.get(query_id)
            top = ranking.ids()[:k] if ranking else []
            dcg = sum(1.0 / math.log2(position + 1) for position, pid in enumerate(top, start=1) if pid in relevant)
            ideal = sum(1.0 / math.log2(position + 1) for position in range(1, min(k, len(relevant)) + 1))
            ndcg_total += dcg / ideal if ideal > 0 else 0.0
            mrr = 0.0
            for position, pid in enumerate(top, start=1):
                if pid in relevant:
                    mrr = 1.0 / position
                    break
            mrr_total += mrr
            recall_total += len(set(top) & relevant) / len(relevant)
        n = len(qrels)
        out[f"ndcg@{k}"] = ndcg_total / n
        out[f"mrr@{k}"] = mrr_total / n
        out[f"recall@{k}"] = recall_total / n
    return out


class Bm25Index:
    """Inverted index with BM25 scoring; k1/b defaults 1.2/0.75, IDF floored
    at zero, and equal scores broken by ascending passage id."""

    def __init__(self, docs: dict[str, str], k1: float = BM25_K1, b: float = BM25_B, analyzer=None):
        if not docs:
            raise ValueError("corpus must be non-empty")
        self.k1 = k1
        self.b = b
        self.analyze = analyzer or (lambda text: _answer_tokens(text))
        self.doc_terms: dict[str, Counter] = {}
        self.doc_len: dict[str, int] = {}
        self.postings: dict[str, set[str]] = {}
        for doc_id, text in docs.items():
            terms = self.analyze(text)
            counts = Counter(terms)
            self.doc_terms[doc_id] = counts
            self.doc_len[doc_id] = len(terms)
            for term in counts:
                self.postings.setdefault(term, set()).add(doc_id)
        self.n_docs = len(docs)
        self.avg_len = sum(self.doc_len.values()) / self.n_docs

    def idf(self, term: str) -> float:
        df = len(self.postings.get(term, ()))
        if df == 0:
            return 0.0
        return max(0.0, math.log((self.n_docs - df + 0.5) / (df + 0.5)))

    def score(self, query_terms: list[str], doc_id: str) -> float:
        counts = self.doc_terms[doc_id]
        length = self.doc_len[doc_id]
        norm = self.k1 * (1 - self.b + self.b * length / self.avg_len) if self.avg_len > 0 else self.k1
        total = 0.0
        for term in query_terms:
            tf = counts.get(term, 0)
            if tf == 0:
                continue
            total += self.idf(term) * tf * (self.k1 + 1) / (tf + norm)
        return total

    def search(self, query: str, top: int = DEFAULT_TOP) -> list[tuple[str, float]]:
        terms = self.analyze(query)
        if not terms:
            return []
        candidates = set()
        for term in set(terms):
            candidates |= self.postings.get(term, set())
        scored = [(doc_id, self.score(terms, doc_id)) for doc_id in candidates]
        scored.sort(key=lambda pair: (-pair[1], pair[0]))
        return scored[:top]


def bm25_index(docs: dict[str, str], k1: float = BM25_K1, b: float = BM25_B) -> Bm25Index:
    return Bm25Index(docs, k1, b)


def bm25_search(index: Bm25Index, query: str, top: int = DEFAULT_TOP, query_id: str = "") -> Ranking:
    return Ranking(query_id or query, tuple(index.search(query, top)))


def _cosine(a: list[float], b: list[float]) -> float:
    dot = sum(x * y for x, y in zip(a, b))
    norm_a = math.sqrt(sum(x * x for x in a))
    norm_b = math.sqrt(sum(y * y for y in b))
    if norm_a == 0 or norm_b == 0:
        return 0.0
    return dot / (norm_a * norm_b)


def retrieve_triples(
    graph: KnowledgeGraph,
    question: str,
    topic_entities: set[str],
    hops: int,
    embed: EmbedProvider,
    k: int = DEFAULT_TRIPLES,
) -> RetrievedContext:
    """Verbalizes the n-hop neighborhood of the topic entities and keeps the
    k triples most cosine-similar to the question embedding. Zero hops (or an
    edgeless neighborhood) yields an empty context."""
    sub = neighborhood(graph, topic_entities, hops)
    texts = []
    for triple in sorted(sub.triples):
        try:
            texts.append(verbalize_triple(sub, triple))
        except MissingLabelError as exc:
            logger.debug("skipping unverbalizable triple %s: %s", triple, exc)
    if not texts:
        return RetrievedContext(())
    vectors = embed.embed([question] + texts)
    question_vector = vectors[0]
    scored = [
        (text, _cosine(question_vector, vector)) for text, vector in zip(texts, vectors[1:])
    ]
    scored.sort(key=lambda pair: (-pair[1], pair[0]))
    return RetrievedContext(tuple(scored[:k]))


def build_kbqa_prompt(question: str, context: RetrievedContext | None = None, language: str = "en") -> str:
    """The answering prompt: question-only, or triples block then question
    when a non-empty context is given."""
    from .tagging import load_prompt

    if context is None or not context.triples:
        return load_prompt(f"kbqa_prompt_{language}").format(question=question)
    triples = "\n".join(text for text, _ in context.triples)
    return load_prompt(f"kbqa_kg_prompt_{language}").format(triples=triples, question=question)


# -- TSV interchange ---------------------------------------------------


def write_rankings(rankings: list[Ranking], path: str | Path) -> None:
    lines = []
    for ranking in rankings:
        for position, (passage_id, score) in enumerate(ranking.entries, start=1):
            lines.append(f"{ranking.query_id}\t{passage_id}\t{position}\t{score:.6f}")
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def read_rankings(path: str | Path) -> dict[str, Ranking]:
    grouped: dict[str, list[tuple[str, float]]] = {}
    for line_no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 4:
            raise ValueError(f"{path}:{line_no}: expected 4 tab-separated fields")
        query_id, passage_id, _, score = parts
        grouped.setdefault(query_id, []).append((passage_id, float(score)))
    return {query_id: Ranking(query_id, tuple(entries)) for query_id, entries in grouped.items()}


def write_qrels(qrels: dict[str, set[str]], path: str | Path) -> None:
    lines = [
        f"{query_id}\t{passage_id}"
        for query_id in sorted(qrels)
        for passage_id in sorted(qrels[query_id])
    ]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def read_qrels(path: str | Path) -> dict[str, set[str]]:
    qrels: dict[str, set[str]] = {}
    for line_no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ValueError(f"{path}:{line_no}: expected 2 tab-separated fields")
        qrels.setdefault(parts[0], set()).add(parts[1])
    return qrels

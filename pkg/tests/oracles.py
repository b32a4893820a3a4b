"""Slow reference implementations the fast code must agree with.

Everything here favors obviousness over speed: exhaustive enumeration, direct
formula transcription, no indexing, no early exits.
"""

from __future__ import annotations

import math
from collections import Counter
from itertools import product


def bgp_answers(graph, query, bindings=None) -> set[str]:
    """Try every assignment of every variable over the full entity set."""
    fixed = dict(bindings or {})
    names = sorted(
        {
            term.value
            for pattern in query.patterns
            for term in (pattern.subject, pattern.object)
            if term.is_variable
        }
        - fixed.keys()
    )
    facts = {(t.head, t.relation, t.tail) for t in graph.triples}
    universe = sorted(graph.entities)
    answers: set[str] = set()
    for combo in product(universe, repeat=len(names)):
        assignment = dict(fixed)
        assignment.update(zip(names, combo))

        def resolve(term):
            return assignment[term.value] if term.is_variable else term.value

        if all(
            (resolve(p.subject), p.predicate.value, resolve(p.object)) in facts
            for p in query.patterns
        ):
            answers.add(assignment[query.select_variable])
    return answers


def neighborhood_sets(graph, seeds, hops) -> tuple[set[str], set]:
    """Multi-source BFS distances; a triple belongs iff its nearer endpoint
    sits within hops-1 edges of a seed. Returns (entities, triples)."""
    adjacency: dict[str, set[str]] = {}
    for t in graph.triples:
        adjacency.setdefault(t.head, set()).add(t.tail)
        adjacency.setdefault(t.tail, set()).add(t.head)
    dist = {s: 0 for s in seeds}
    frontier = set(seeds)
    step = 0
    while frontier:
        step += 1
        frontier = {
            n for node in frontier for n in adjacency.get(node, ()) if n not in dist
        }
        for node in frontier:
            dist[node] = step
    keep = {
        t
        for t in graph.triples
        if min(dist.get(t.head, math.inf), dist.get(t.tail, math.inf)) < hops
    }
    entities = set(seeds) | {e for t in keep for e in (t.head, t.tail)}
    return entities, keep


def em_f1(prediction: str, gold: str, normalize) -> tuple[float, float]:
    p, g = normalize(prediction), normalize(gold)
    em = 1.0 if p == g else 0.0
    p_tokens, g_tokens = p.split(), g.split()
    if not p_tokens or not g_tokens:
        return em, 1.0 if p_tokens == g_tokens else 0.0
    overlap = sum((Counter(p_tokens) & Counter(g_tokens)).values())
    if overlap == 0:
        return em, 0.0
    precision = overlap / len(p_tokens)
    recall = overlap / len(g_tokens)
    return em, 2 * precision * recall / (precision + recall)


def ndcg_at(ranked_ids: list[str], relevant: set[str], k: int) -> float:
    gains = [1.0 if doc in relevant else 0.0 for doc in ranked_ids[:k]]
    dcg = sum(g / math.log2(i + 2) for i, g in enumerate(gains))
    ideal = sum(1.0 / math.log2(i + 2) for i in range(min(len(relevant), k)))
    return dcg / ideal if ideal else 0.0


def mrr_at(ranked_ids: list[str], relevant: set[str], k: int) -> float:
    for i, doc in enumerate(ranked_ids[:k]):
        if doc in relevant:
            return 1.0 / (i + 1)
    return 0.0


def recall_at(ranked_ids: list[str], relevant: set[str], k: int) -> float:
    if not relevant:
        return 0.0
    return len(set(ranked_ids[:k]) & relevant) / len(relevant)


def cohen_kappa(pairs: list[tuple[str, str]]) -> tuple[float, float | None]:
    """(accuracy, kappa); kappa None when expected agreement is 1."""
    n = len(pairs)
    observed = sum(1 for a, b in pairs if a == b) / n
    a_counts = Counter(a for a, _ in pairs)
    b_counts = Counter(b for _, b in pairs)
    expected = sum(
        (a_counts[c] / n) * (b_counts[c] / n) for c in a_counts.keys() | b_counts.keys()
    )
    if abs(1.0 - expected) < 1e-12:
        return observed, None
    return observed, (observed - expected) / (1.0 - expected)


def kbqa_accuracy(responses: dict[str, str], gold_labels: dict[str, list[str]]) -> float:
    """Mean over questions of the fraction of gold labels found in the
    response, case-insensitively."""
    total = 0.0
    for qid, labels in gold_labels.items():
        text = responses.get(qid, "").casefold()
        hits = sum(1 for label in labels if label.casefold() in text)
        total += hits / len(labels)
    return total / len(gold_labels) if gold_labels else 0.0


def bm25_scores(
    docs: dict[str, str], query: str, tokenizer, k1: float = 1.2, b: float = 0.75
) -> dict[str, float]:
    """Direct BM25 with IDF floored at zero."""
    doc_tokens = {doc_id: tokenizer(text) for doc_id, text in docs.items()}
    n = len(docs)
    avgdl = sum(len(tokens) for tokens in doc_tokens.values()) / n
    scores: dict[str, float] = {}
    for doc_id, tokens in doc_tokens.items():
        counts = Counter(tokens)
        score = 0.0
        for term in tokenizer(query):
            tf = counts.get(term, 0)
            if tf == 0:
                continue
            df = sum(1 for toks in doc_tokens.values() if term in toks)
            idf = max(0.0, math.log((n - df + 0.5) / (df + 0.5)))
            score += idf * tf * (k1 + 1) / (tf + k1 * (1 - b + b * len(tokens) / avgdl))
        scores[doc_id] = score
    return scores


def bm25_top(docs, query, tokenizer, top, k1=1.2, b=0.75) -> list[tuple[str, float]]:
    """Ranked (id, score) pairs over documents sharing >=1 term with the query."""
    scores = bm25_scores(docs, query, tokenizer, k1, b)
    query_terms = set(tokenizer(query))
    matching = [
        (doc_id, score)
        for doc_id, score in scores.items()
        if query_terms & set(tokenizer(docs[doc_id]))
    ]
    matching.sort(key=lambda kv: (-kv[1], kv[0]))
    return matching[:top]

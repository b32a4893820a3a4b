"""Shared text utilities: normalization, tokenization, common-subsequence measures."""

from __future__ import annotations

import re
import string
import unicodedata

_WS_RE = re.compile(r"\s+")
_PUNCT_TABLE = {ord(c): " " for c in string.punctuation}


def normalize_whitespace(text: str) -> str:
    """Collapse runs of whitespace to single spaces and strip the ends."""
    return _WS_RE.sub(" ", text).strip()


def tokenize(text: str) -> list[str]:
    """Whitespace tokenization after normalization."""
    normalized = normalize_whitespace(text)
    return normalized.split(" ") if normalized else []


def normalize_question(text: str) -> str:
    """Canonical question form: case-folded, whitespace-collapsed, exactly one trailing '?'.

    Idempotent; empty input stays empty.
    """
    folded = normalize_whitespace(text).casefold()
    if not folded:
        return ""
    return folded.rstrip("?").rstrip() + "?"


def strip_token(token: str) -> str:
    """Drop leading/trailing punctuation and casefold; comparison form for lemma matching."""
    return token.strip(string.punctuation).casefold()


def normalize_answer(text: str) -> str:
    """Normalization for answer comparison: case-fold, strip punctuation, collapse whitespace."""
    folded = unicodedata.normalize("NFC", text).casefold()
    return normalize_whitespace(folded.translate(_PUNCT_TABLE))


def lcs_length(a, b) -> int:
    """Length of the longest common subsequence of two sequences.

    Two-row DP, O(len(a) * len(b)) time, O(min) extra space.
    """
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return 0
    prev = [0] * (len(b) + 1)
    for item in a:
        curr = [0]
        for j, other in enumerate(b, start=1):
            if item == other:
                curr.append(prev[j - 1] + 1)
            else:
                curr.append(max(prev[j], curr[j - 1]))
        prev = curr
    return prev[-1]


def common_prefix_length(a, b) -> int:
    """Length of the longest common prefix of two sequences."""
    n = 0
    for x, y in zip(a, b):
        if x != y:
            break
        n += 1
    return n

from hypothesis import given
from hypothesis import strategies as st

from kbqakit.providers import FailingProvider, NerSpan, ReplaySuggest
from kbqakit.questions import (
    CandidateQuestion,
    Prefix,
    complete_prefix,
    dedupe_candidates,
    extract_prefixes,
    normalize_question,
    question_id,
)
from kbqakit.text import normalize_whitespace


class YearNer:
    name = "year"

    def spans(self, text):
        if "1898" not in text:
            return []
        i = text.index("1898")
        return [NerSpan(text="1898", start=i, end=i + 4)]


class CannedSuggest:
    name = "canned"

    def __init__(self, completions):
        self.completions = completions

    def suggest(self, prefix, limit):
        return self.completions[:limit]


def test_first_k_prefixes():
    prefixes = extract_prefixes("Who discovered radium in 1898?")
    assert {p.text for p in prefixes} == {"Who", "Who discovered", "Who discovered radium"}
    assert {p.method for p in prefixes} == {"first-1", "first-2", "first-3"}


def test_ner_prefix_added():
    prefixes = extract_prefixes("Who discovered radium in 1898?", [YearNer()])
    by_method = {p.method: p.text for p in prefixes}
    assert by_method["up-to-first-named-entity"] == "Who discovered radium in"


def test_one_token_question():
    prefixes = extract_prefixes("Who?")
    assert [(p.text, p.method) for p in prefixes] == [("Who?", "first-1")]


def test_prefixes_share_source_question():
    prefixes = extract_prefixes("Who wrote the ninth symphony?")
    assert len({p.source_question for p in prefixes}) == 1


@given(st.text(alphabet=st.characters(whitelist_categories=("Lu", "Ll", "Zs")), min_size=1, max_size=60))
def test_prefix_invariants(question):
    normalized = normalize_whitespace(question)
    if not normalized:
        with pytest.raises(ValueError):
            extract_prefixes(question, [YearNer()])
        return
    prefixes = extract_prefixes(question, [YearNer()])
    assert 1 <= len(prefixes) <= 3 + 1
    for prefix in prefixes:
        assert prefix.text
        assert normalized.startswith(prefix.text)


def test_complete_echo_provider():
    prefix = Prefix("Who wrote", "first-2", "q1")
    out = complete_prefix(prefix, CannedSuggest(["Who wrote"]))
    assert len(out) == 1
    assert out[0].text == "Who wrote"
    assert not out[0].drifted
    assert out[0].provider == "canned"


def test_complete_keeps_provider_order():
    prefix = Prefix("Who wrote", "first-2", "q1")
    canned = ["Who wrote it?", "Who wrote the book?", "Who wrote that song?"]
    out = complete_prefix(prefix, CannedSuggest(canned))
    assert [c.text for c in out] == canned
    assert [c.response_index for c in out] == [0, 1, 2]


def test_complete_flags_drift():
    prefix = Prefix("Who wrote", "first-2", "q1")
    out = complete_prefix(prefix, CannedSuggest(["Who wrote it?", "Where is it?"]))
    assert [c.drifted for c in out] == [False, True]


def test_complete_respects_max():
    prefix = Prefix("Who", "first-1", "q1")
    out = complete_prefix(prefix, CannedSuggest([f"Who {i}" for i in range(9)]), max_completions=4)
    assert len(out) == 4


def test_complete_dedupes_within_provider():
    prefix = Prefix("Who wrote", "first-2", "q1")
    out = complete_prefix(prefix, CannedSuggest(["Who wrote it?", "who  wrote it??"]))
    assert len(out) == 1


def test_complete_provider_failure():
    prefix = Prefix("Who wrote", "first-2", "q1")
    assert complete_prefix(prefix, FailingProvider()) == []


def test_cross_prefix_dedup():
    first = complete_prefix(Prefix("Who", "first-1", "q1"), CannedSuggest(["Who wrote it?"]))
    second = complete_prefix(Prefix("Who wrote", "first-2", "q2"), CannedSuggest(["who wrote it?"]))
    merged = dedupe_candidates(first + second)
    assert len(merged) == 1
    assert merged[0].text == "Who wrote it?"


def test_dedup_preserves_first_occurrence_order():
    candidates = [
        CandidateQuestion("B question?", Prefix("B", "first-1", "q"), "s", 0, False),
        CandidateQuestion("A question?", Prefix("A", "first-1", "q"), "s", 0, False),
        CandidateQuestion("b QUESTION?", Prefix("b", "first-1", "q"), "s", 1, False),
    ]
    merged = dedupe_candidates(candidates)
    assert [c.text for c in merged] == ["B question?", "A question?"]


def test_replay_suggest_keyed_by_raw_prefix():
    replay = ReplaySuggest({"Who wrote": ["Who wrote it?"]})
    out = complete_prefix(Prefix("Who wrote", "first-2", "q1"), replay)
    assert [c.text for c in out] == ["Who wrote it?"]
    assert complete_prefix(Prefix("Unknown", "first-1", "q2"), replay) == []


def test_question_id_stable_and_normalized():
    assert question_id("Who  was there?") == question_id("who was there?")
    assert question_id("Who was there?") != question_id("Who was here?")

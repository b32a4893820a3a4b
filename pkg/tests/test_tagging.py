import pytest

from kbqakit.passages import Article, Link, segment
from kbqakit.providers import (
    DictionaryLemmatizer,
    FailingProvider,
    IdentityLemmatizer,
    ReplayQaTagger,
)
from kbqakit.questions import normalize_question
from kbqakit.tagging import (
    FAILED,
    GROUNDED,
    TaggingError,
    build_tag_prompt,
    extract_answer_entities,
    ground_span,
    request_tag,
)

ELIZABETH_CONTEXT = (
    "Elizabeth II (; born April 21, 1926 in London, died September 8, 2022 in Balmoral) - "
    "Queen of the United Kingdom of Great Britain and Northern Ireland of the Windsor dynasty "
    "from February 6, 1952 (crowned June 2, 1953) to September 8, 2022."
)
ELIZABETH_QUESTION = "in what year was Queen Elizabeth ii born?"


def passage_from(text, links=(), page_id="p"):
    art = Article(title="T", page_id=page_id, words=text.split(), links=list(links))
    return segment(art)[0]


class EchoFirstSentence:
    name = "echo"

    def tag(self, question, passage_text):
        return passage_text.split(".")[0] + "."


def test_request_tag_replays_known_exchange():
    passage = passage_from(ELIZABETH_CONTEXT)
    provider = ReplayQaTagger({normalize_question(ELIZABETH_QUESTION): "April 21, 1926"})
    assert request_tag(ELIZABETH_QUESTION, passage, provider) == "April 21, 1926"


def test_request_tag_echo_mock():
    passage = passage_from("The sky is blue. More text follows.")
    quote = request_tag("What color?", passage, EchoFirstSentence())
    assert quote == "The sky is blue."


def test_request_tag_empty_output_is_error():
    passage = passage_from("Some words here.")
    with pytest.raises(TaggingError):
        request_tag("q?", passage, ReplayQaTagger({}))


def test_request_tag_provider_failure():
    passage = passage_from("Some words here.")
    with pytest.raises(TaggingError):
        request_tag("q?", passage, FailingProvider())


def test_ground_verbatim_quote():
    passage = passage_from(ELIZABETH_CONTEXT)
    span, report = ground_span(passage, "April 21, 1926", IdentityLemmatizer())
    assert report.status == GROUNDED
    assert report.matched_ratio == 1.0
    assert span.text == "April 21, 1926"
    assert passage.text[span.char_start:span.char_end] == span.text


def test_ground_first_occurrence_wins():
    passage = passage_from("red fish blue fish red fish again")
    span, report = ground_span(passage, "red fish", IdentityLemmatizer())
    assert report.matched_ratio == 1.0
    assert span.word_start == 0


def test_ground_prefers_shorter_window():
    passage = passage_from("one two three four five")
    span, _ = ground_span(passage, "two three", IdentityLemmatizer())
    assert (span.word_start, span.word_end) == (1, 3)


def test_ground_inflected_with_lemma_table():
    passage = passage_from("The city grew around castles built long ago")
    table = {"castles": "castle", "castle": "castle"}
    span, report = ground_span(passage, "around castle built", DictionaryLemmatizer(table))
    assert report.status == GROUNDED
    assert report.matched_ratio == 1.0
    assert span.text == "around castles built"


def test_ground_disjoint_quote_fails():
    passage = passage_from("completely unrelated passage content")
    span, report = ground_span(passage, "orbital mechanics handbook", IdentityLemmatizer())
    assert span is None
    assert report.status == FAILED
    assert report.matched_ratio < 0.8


def test_ground_threshold_boundary():
    passage = passage_from("alpha beta gamma delta epsilon")
    span, report = ground_span(passage, "alpha beta gamma zeta", IdentityLemmatizer(), min_ratio=0.75)
    assert report.status == GROUNDED
    assert report.matched_ratio == 0.75
    _, strict = ground_span(passage, "alpha beta gamma zeta", IdentityLemmatizer(), min_ratio=0.8)
    assert strict.status == FAILED


def test_ground_deterministic():
    passage = passage_from("a b c d e f g h i j")
    first = ground_span(passage, "c d e", IdentityLemmatizer())
    second = ground_span(passage, "c d e", IdentityLemmatizer())
    assert first == second


def test_ground_empty_quote_is_error():
    passage = passage_from("words exist here")
    with pytest.raises(ValueError):
        ground_span(passage, "   ", IdentityLemmatizer())


def test_entities_single_link():
    links = [Link(word_start=3, word_end=5, target_entity="Q1", target_title="A")]
    passage = passage_from("w0 w1 w2 w3 w4 w5 w6", links=links)
    span, _ = ground_span(passage, "w3 w4", IdentityLemmatizer())
    assert extract_answer_entities(passage, span) == {"Q1"}


def test_entities_straddling_two_links():
    links = [Link(word_start=0, word_end=2, target_entity="Q1", target_title="A"),
             Link(word_start=3, word_end=5, target_entity="Q2", target_title="B")]
    passage = passage_from("w0 w1 w2 w3 w4 w5", links=links)
    span, _ = ground_span(passage, "w1 w2 w3", IdentityLemmatizer())
    assert extract_answer_entities(passage, span) == {"Q1", "Q2"}


def test_entities_span_without_links():
    passage = passage_from("w0 w1 w2 w3 w4")
    span, _ = ground_span(passage, "w1 w2", IdentityLemmatizer())
    assert extract_answer_entities(passage, span) == set()


def test_entities_ignore_unresolved_links():
    links = [Link(word_start=1, word_end=3, target_entity=None, target_title="Missing")]
    passage = passage_from("w0 w1 w2 w3", links=links)
    span, _ = ground_span(passage, "w1 w2", IdentityLemmatizer())
    assert extract_answer_entities(passage, span) == set()


def test_tag_prompt_embeds_inputs():
    prompt = build_tag_prompt("Who was born?", "Some passage text.")
    assert "[START]Some passage text.[END]" in prompt
    assert "Who was born?" in prompt
    assert "EXACT quote" in prompt

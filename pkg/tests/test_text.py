from hypothesis import given
from hypothesis import strategies as st

from kbqakit.text import (
    common_prefix_length,
    lcs_length,
    normalize_answer,
    normalize_question,
    normalize_whitespace,
    strip_token,
    tokenize,
)


def test_normalize_question_rules():
    assert normalize_question("  KTO  to?? ") == "kto to?"


def test_normalize_question_idempotent_and_caseless():
    assert normalize_question("kto to?") == "kto to?"
    assert normalize_question("Kto To?") == normalize_question("kto to?")


@given(st.text(max_size=60))
def test_normalize_question_idempotence_property(text):
    once = normalize_question(text)
    assert normalize_question(once) == once


def test_normalize_whitespace():
    assert normalize_whitespace(" a \t b\n\nc ") == "a b c"


def test_normalize_answer_strips_punctuation_and_case():
    assert normalize_answer("April 21, 1926.") == "april 21 1926"


def test_tokenize_splits_on_whitespace():
    assert tokenize(" Who  was\tthere? ") == ["Who", "was", "there?"]
    assert tokenize("   ") == []


def test_strip_token_gives_comparison_form():
    assert strip_token("Beethoven,") == "beethoven"
    assert strip_token("(1826)") == "1826"


def test_lcs_known_values():
    assert lcs_length("warsaw", "warsawa") == 6
    assert lcs_length("abc", "abc") == 3
    assert lcs_length("abc", "xyz") == 0
    assert lcs_length(["a", "b", "c"], ["b", "c", "d"]) == 2


@given(st.text(max_size=25), st.text(max_size=25))
def test_lcs_bounds_and_symmetry(a, b):
    length = lcs_length(a, b)
    assert 0 <= length <= min(len(a), len(b))
    assert length == lcs_length(b, a)


@given(st.text(max_size=30))
def test_lcs_self(text):
    assert lcs_length(text, text) == len(text)


def test_common_prefix_length():
    assert common_prefix_length("warsaw", "warsawa") == 6
    assert common_prefix_length("abc", "xbc") == 0

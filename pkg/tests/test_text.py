import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pigec.text import PUNCTUATION, Token, detokenize, gaps, surfaces, tokenize


@pytest.mark.parametrize("text, expected", [
    ("other disorders .", ["other", "disorders", "."]),
    ("", []),
    ("don't stop.", ["don't", "stop", "."]),
    ('"Hi," she said.', ['"', "Hi", ",", '"', "she", "said", "."]),
    ("(a) b", ["(", "a", ")", "b"]),
    ("  spaced \t out\n", ["spaced", "out"]),
    ("e.g. 3.5", ["e.g", ".", "3.5"]),
])
def test_tokenize(text, expected):
    assert surfaces(text) == expected


def test_offsets():
    text = "Hello, world!"
    assert tokenize(text) == [Token("Hello", 0, 5), Token(",", 5, 6), Token("world", 7, 12), Token("!", 12, 13)]


def test_internal_apostrophe_rule_trace():
    # only edge characters are peeled; the apostrophe in don't is interior
    text = "don't"
    assert text[0] not in PUNCTUATION and text[-1] not in PUNCTUATION
    assert surfaces(text) == ["don't"]
    assert surfaces("'don't'") == ["'", "don't", "'"]


def test_combining_mark_stays_with_punctuation():
    # "." followed by U+0301 is one grapheme cluster, so it is not split off
    assert surfaces("a .́") == ["a", ".́"]


@pytest.mark.parametrize("tokens, expected", [
    (["other", "disorders", "?"], "other disorders?"),
    ([], ""),
    (["a", "(", "b", ")"], "a (b)"),
    (["Hi", ",", "you", "."], "Hi, you."),
])
def test_detokenize(tokens, expected):
    assert detokenize(tokens) == expected


texts = st.text(alphabet=st.sampled_from(list("ab '\".,?!;:()\t\n") + ["é", "́", "→"]), max_size=30)


@given(texts)
def test_gaps_reconstruct_text(text):
    toks = tokenize(text)
    pieces = gaps(text, toks)
    rebuilt = pieces[0] + "".join(t.surface + g for t, g in zip(toks, pieces[1:]))
    assert rebuilt == text


@given(texts)
def test_token_invariants(text):
    toks = tokenize(text)
    for tok in toks:
        assert tok.surface == text[tok.char_start:tok.char_end]
        assert tok.surface and not any(c.isspace() for c in tok.surface)
    for a, b in zip(toks, toks[1:]):
        assert a.char_end <= b.char_start


@given(texts)
def test_idempotent_on_single_spaced_join(text):
    s = surfaces(text)
    assert surfaces(" ".join(s)) == s


@settings(max_examples=500)
@given(texts)
def test_detokenize_round_trip_is_stable(text):
    s = surfaces(text)
    assert surfaces(detokenize(s)) == s

import math

import pytest
from hypothesis import given, strategies as st

from flueval import ngram_lm
from flueval.errors import (
    FormatError,
    MissingExternalScoreError,
    MissingVocabularyError,
    ZeroLengthError,
)
from flueval.ngram_lm import BOS, EOS, NGramModel, UNK
from flueval.scorers import (
    ExternalScoreTable,
    load_external_scores,
    nce,
    ppl,
    score_dataset,
    score_sentence,
    slor,
)
from flueval.subword import SubwordVocabulary


# --- plain arithmetic ---------------------------------------------------------

def test_slor_arithmetic():
    assert slor(-4.0, -6.0, 2).value == 1.0
    assert slor(-6.0, -6.0, 3).value == 0.0
    assert slor(-9.0, -3.0, 3).value == -2.0


def test_nce_arithmetic():
    assert nce(-4.0, 2).value == -2.0
    assert nce(-7.5, 1).value == -7.5
    assert nce(0.0, 4).value == 0.0


def test_ppl_arithmetic():
    assert ppl(-4.0, 2).value == pytest.approx(math.e ** 2)
    assert ppl(0.0, 3).value == 1.0


def test_zero_length_rejected():
    for fn in (lambda: slor(-1.0, -1.0, 0), lambda: nce(-1.0, 0), lambda: ppl(-1.0, 0)):
        with pytest.raises(ZeroLengthError):
            fn()


@given(st.floats(min_value=-500.0, max_value=0.0), st.integers(min_value=1, max_value=200))
def test_ppl_nce_bijection(log_prob, length):
    assert ppl(log_prob, length).value == math.exp(-nce(log_prob, length).value)


@given(st.floats(min_value=-500.0, max_value=0.0),
       st.floats(min_value=-500.0, max_value=0.0),
       st.integers(min_value=1, max_value=200))
def test_doubling_inputs_preserves_slor_and_nce(lp, ulp, n):
    assert slor(2 * lp, 2 * ulp, 2 * n).value == slor(lp, ulp, n).value
    assert nce(2 * lp, 2 * n).value == nce(lp, n).value


# --- model-backed scoring -------------------------------------------------------

def test_unigram_model_collapses_slor_to_zero():
    corpus = [["the", "cat"], ["the", "dog", "sat"], ["a", "cat", "sat"]] * 5
    model = ngram_lm.train(corpus, order=1)
    for sentence in corpus:
        assert score_sentence(model, sentence, "slor").value == 0.0
    assert score_sentence(model, ["dog", "unseen-token"], "slor").value == 0.0


def test_uniform_model_ppl_equals_vocabulary_size():
    # counts: a=1, b=1, </s>=1 -> uniform over 3 outcomes
    model = ngram_lm.train([["a", "b"]], order=1)
    for sentence in (["a"], ["b", "a"], ["a", "a", "b"]):
        assert score_sentence(model, sentence, "ppl").value == pytest.approx(3.0, rel=1e-12)


def test_uniform_model_nce_is_length_invariant():
    model = ngram_lm.train([["a", "b"]], order=1)
    single = score_sentence(model, ["a", "b"], "nce").value
    double = score_sentence(model, ["a", "b", "a", "b"], "nce").value
    assert double == pytest.approx(single, abs=1e-12)


def _hand_built_bigram():
    """Order-2 model where two tokens (a frequent and a rare place name) have
    a conditional-probability ratio in one context equal to their unigram
    ratio (both exact powers of two), and identical continuation behavior."""
    lg = lambda p: math.log(p)
    mle = {
        "my": lg(1 / 8), "cousin": lg(1 / 32), "moved": lg(1 / 8), "to": lg(1 / 8),
        "canada": lg(1 / 4), "palau": lg(1 / 16), EOS: lg(1 / 8),
    }
    cond2 = {
        (BOS, "my"): lg(1 / 2), ("my", "cousin"): lg(1 / 4),
        ("cousin", "moved"): lg(1 / 2), ("moved", "to"): lg(1 / 2),
        ("to", "canada"): lg(1 / 2), ("to", "palau"): lg(1 / 8),
        ("canada", EOS): lg(1 / 2), ("palau", EOS): lg(1 / 2),
    }
    histories = {gram[:-1] for gram in cond2}
    backoff2 = {hist: lg(0.01) for hist in histories}
    vocab = {w for gram in cond2 for w in gram} | {BOS, EOS, UNK}
    cond1 = {(w,): lg(1 / 16) for w in vocab if w != BOS}
    return NGramModel(2, 0.75, vocab, mle, {1: cond1, 2: cond2},
                      {1: {(): lg(0.1)}, 2: backoff2})


def test_rare_token_compensation():
    """Matched conditional/unigram ratios: equal SLOR, unequal NCE."""
    model = _hand_built_bigram()
    sent_common = ["my", "cousin", "moved", "to", "canada"]
    sent_rare = ["my", "cousin", "moved", "to", "palau"]
    slor_common = score_sentence(model, sent_common, "slor").value
    slor_rare = score_sentence(model, sent_rare, "slor").value
    nce_common = score_sentence(model, sent_common, "nce").value
    nce_rare = score_sentence(model, sent_rare, "nce").value
    assert abs(slor_common - slor_rare) < 1e-12
    assert abs(nce_common - nce_rare) > 0.1
    assert nce_common > nce_rare  # the frequent token scores higher raw


def test_wordpiece_scoring_path():
    vocab = SubwordVocabulary([UNK, "ab", "a", "##b"], target_size=4)
    corpus_pieces = [["ab"], ["a", "##b"], ["ab", "a", "##b"]]
    model = ngram_lm.train(corpus_pieces, order=2)
    word_model = ngram_lm.train([["ab"], ["ab"]], order=2)
    score_wp = score_sentence(model, ["ab"], "slor", "wordpiece", vocab)
    score_word = score_sentence(word_model, ["ab"], "slor", "word")
    assert score_wp.unit_space == "wordpiece"
    assert math.isfinite(score_wp.value)
    # the two unit spaces are independent numbers; no equality constraint
    assert score_wp.value != score_word.value

    with pytest.raises(MissingVocabularyError):
        score_sentence(model, ["ab"], "slor", "wordpiece")


def test_score_dataset_with_model():
    model = ngram_lm.train([["a", "b"], ["b", "a"]], order=1)
    sentences = {"s1": ["a", "b"], "s2": ["b"]}
    scores = score_dataset(model, sentences, "nce")
    assert set(scores) == {"s1", "s2"}
    assert all(s.kind == "nce" for s in scores.values())


# --- external score tables -------------------------------------------------------

def test_external_table_scoring():
    table = ExternalScoreTable({"x": (-4.0, 2, -6.0)})
    scores = score_dataset(table, {"x": ["ignored", "tokens"]}, "slor")
    assert scores["x"].value == 1.0
    assert score_dataset(table, {"x": []}, "nce")["x"].value == -2.0

    with pytest.raises(MissingExternalScoreError):
        score_dataset(table, {"y": ["tokens"]}, "slor")


def test_external_table_validation():
    with pytest.raises(FormatError):
        ExternalScoreTable({"x": (1.0, 2, -6.0)})
    with pytest.raises(ZeroLengthError):
        ExternalScoreTable({"x": (-1.0, 0, -6.0)})


def test_external_table_file_round_trip(tmp_path):
    path = tmp_path / "ext.tsv"
    path.write_text(
        "#extscores v1\nid1\t-4.0\t2\t-6.0\nid2\t-9.0\t3\t-9.0\n",
        encoding="utf-8",
    )
    table = load_external_scores(path)
    assert len(table) == 2
    assert table.lookup("id1") == (-4.0, 2, -6.0)
    scores = score_dataset(table, {"id1": [], "id2": []}, "slor")
    assert scores["id1"].value == 1.0
    assert scores["id2"].value == 0.0


def test_external_table_file_errors(tmp_path):
    bad_header = tmp_path / "a.tsv"
    bad_header.write_text("#wrong\n", encoding="utf-8")
    with pytest.raises(FormatError):
        load_external_scores(bad_header)

    bad_fields = tmp_path / "b.tsv"
    bad_fields.write_text("#extscores v1\nid1\t-4.0\n", encoding="utf-8")
    with pytest.raises(FormatError):
        load_external_scores(bad_fields)

    dupe = tmp_path / "c.tsv"
    dupe.write_text("#extscores v1\nid1\t-4.0\t2\t-6.0\nid1\t-4.0\t2\t-6.0\n",
                    encoding="utf-8")
    with pytest.raises(FormatError):
        load_external_scores(dupe)

import math
import random

import pytest

from flueval import ngram_lm
from flueval.errors import CorpusEmptyError, FormatError, InvalidDiscountError
from flueval.ngram_lm import BOS, EOS, LOG_FLOOR, UNK, load, save, train


def toy_corpus(n_sentences=100, n_types=25, seed=7, min_len=3, max_len=10):
    rng = random.Random(seed)
    words = [f"w{i}" for i in range(n_types)]
    return [[rng.choice(words) for _ in range(rng.randint(min_len, max_len))]
            for _ in range(n_sentences)]


def observed_histories(model, level):
    return sorted({gram[:-1] for gram in model.cond[level]})


# --- training and the hand-counted MLE example --------------------------------

def test_order1_mle_counts():
    model = train([["a", "a", "b"]], order=1)
    # events: a a b </s> -> p(a)=2/4, p(b)=1/4, p(</s>)=1/4
    assert math.exp(model.mle["a"]) == pytest.approx(0.5, abs=1e-15)
    assert math.exp(model.mle["b"]) == pytest.approx(0.25, abs=1e-15)
    assert math.exp(model.mle[EOS]) == pytest.approx(0.25, abs=1e-15)
    assert sum(math.exp(v) for v in model.mle.values()) == pytest.approx(1.0, abs=1e-12)


def test_invalid_discount_rejected():
    for bad in (0.0, 1.0, -0.1, 1.5):
        with pytest.raises(InvalidDiscountError):
            train([["a"]], order=2, discount=bad)


def test_empty_corpus_rejected():
    with pytest.raises(CorpusEmptyError):
        train([], order=2)
    with pytest.raises(CorpusEmptyError):
        train([[]], order=2)


def test_unk_threshold_maps_rare_tokens():
    corpus = [["common", "common", "rare"], ["common", "common"]]
    model = train(corpus, order=1, unk_threshold=2)
    assert "rare" not in model.vocab
    assert UNK in model.mle
    # events: 5 tokens (one mapped to <unk>) + 2 terminators
    assert math.exp(model.mle[UNK]) == pytest.approx(1 / 7, abs=1e-15)


def test_single_sentence_order2_hand_computation():
    # corpus {"a"}, D=0.75: base continuation T=2, N1=2, V=3
    #   p_base(a) = 0.25/2 + 0.75/3 = 0.375
    #   p(a|<s>)  = 0.25/1 + 0.75 * 0.375 = 0.53125
    model = train([["a"]], order=2, discount=0.75)
    assert model.conditional_prob("a", [BOS]) == pytest.approx(0.53125, abs=1e-12)
    assert model.conditional_prob(EOS, ["a"]) == pytest.approx(0.53125, abs=1e-12)
    # as the discount vanishes, all mass collapses onto the only continuation
    tiny = train([["a"]], order=2, discount=1e-9)
    assert tiny.conditional_prob("a", [BOS]) == pytest.approx(1.0, abs=1e-8)


# --- normalization -------------------------------------------------------------

@pytest.mark.parametrize("order", [2, 3])
def test_conditionals_sum_to_one_over_vocab(order):
    model = train(toy_corpus(40, 12), order=order)
    for level in range(order, 0, -1):
        histories = observed_histories(model, level) if level > 1 else [()]
        for hist in histories:
            total = sum(model._level_prob(w, hist, level) for w in model.vocab)
            assert total == pytest.approx(1.0, abs=1e-6), (level, hist)


def test_unseen_history_backs_off_and_normalizes():
    model = train(toy_corpus(20, 8), order=3)
    total = sum(model.conditional_prob(w, ["nonexistent", "alsonot"])
                for w in model.vocab)
    assert total == pytest.approx(1.0, abs=1e-6)


# --- sentence scoring -----------------------------------------------------------

def test_sentence_logprob_order1_hand_sum():
    model = train([["a", "a", "b"]], order=1)
    result = model.sentence_logprob(["a", "b"])
    assert result.log_prob == pytest.approx(
        math.log(0.5) + math.log(0.25) + math.log(0.25), abs=1e-12)
    assert result.scored_length == 3


def test_unigram_logprob_equals_sentence_logprob_for_order1():
    model = train(toy_corpus(30, 10), order=1)
    for sentence in toy_corpus(5, 10, seed=9):
        assert model.unigram_logprob(sentence) == model.sentence_logprob(sentence).log_prob


def test_unigram_logprob_hand_sum():
    model = train([["a", "a", "b"]], order=1)
    assert model.unigram_logprob(["a", "b"]) == pytest.approx(
        math.log(0.5) + math.log(0.25) + math.log(0.25), abs=1e-12)


def test_oov_scores_finite():
    model = train([["a", "a", "b"]], order=1)
    result = model.sentence_logprob(["zzz"])
    assert math.isfinite(result.log_prob)
    assert result.log_prob <= LOG_FLOOR  # <unk> has no training mass here
    assert math.isfinite(model.unigram_logprob(["zzz"]))
    bigram = train([["a", "a", "b"]], order=2)
    assert math.isfinite(bigram.sentence_logprob(["zzz", "a"]).log_prob)


def test_unk_scoring_with_trained_unk():
    model = train([["x", "x", "x", "y"]], order=1, unk_threshold=2)
    # y mapped to <unk>: events x x x <unk> </s>
    expected = math.log(1 / 5) + math.log(1 / 5)
    assert model.unigram_logprob(["never-seen"]) == pytest.approx(expected, abs=1e-12)


def test_empty_sequence_rejected():
    model = train([["a"]], order=1)
    with pytest.raises(ValueError):
        model.sentence_logprob([])
    with pytest.raises(ValueError):
        model.unigram_logprob([])


def test_scored_length_counts_terminator():
    model = train(toy_corpus(10, 5), order=2)
    assert model.sentence_logprob(["w0"]).scored_length == 2
    assert model.sentence_logprob(["w0", "w1", "w2"]).scored_length == 4


def test_higher_order_tightens_training_likelihood():
    for seed in (1, 2, 3):
        corpus = toy_corpus(40, 10, seed=seed)
        uni = train(corpus, order=1)
        tri = train(corpus, order=3)
        ll_uni = sum(uni.sentence_logprob(s).log_prob for s in corpus)
        ll_tri = sum(tri.sentence_logprob(s).log_prob for s in corpus)
        assert ll_tri >= ll_uni


# --- serialization ---------------------------------------------------------------

@pytest.mark.parametrize("order", [1, 2, 3])
def test_save_load_identity_on_queries(tmp_path, order):
    model = train(toy_corpus(30, 10), order=order)
    path = tmp_path / "m.lm"
    save(model, path)
    loaded = load(path)
    assert loaded.order == model.order
    assert loaded.discount == model.discount
    assert loaded.vocab == model.vocab
    probes = toy_corpus(5, 12, seed=99) + [["oov-token", "w1"]]
    for sentence in probes:
        assert loaded.sentence_logprob(sentence).log_prob == \
            model.sentence_logprob(sentence).log_prob
        assert loaded.unigram_logprob(sentence) == model.unigram_logprob(sentence)


@pytest.mark.parametrize("order", [1, 2, 3])
def test_save_load_save_byte_identical(tmp_path, order):
    model = train(toy_corpus(30, 10), order=order)
    first = tmp_path / "m1.lm"
    second = tmp_path / "m2.lm"
    save(model, first)
    save(load(first), second)
    assert first.read_bytes() == second.read_bytes()


def test_load_rejects_malformed(tmp_path):
    bad = tmp_path / "bad.lm"
    bad.write_text("no header\n", encoding="utf-8")
    with pytest.raises(FormatError):
        load(bad)
    truncated = tmp_path / "trunc.lm"
    truncated.write_text("#nglm v1 order=2 discount=0.75\n\\mle:\n-0.5\ta\n",
                         encoding="utf-8")
    with pytest.raises(FormatError):
        load(truncated)


def test_training_is_deterministic(tmp_path):
    corpus = toy_corpus(25, 8)
    first, second = tmp_path / "a.lm", tmp_path / "b.lm"
    save(train(corpus, order=3), first)
    save(train(corpus, order=3), second)
    assert first.read_bytes() == second.read_bytes()

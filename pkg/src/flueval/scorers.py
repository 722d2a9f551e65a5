"""Referenceless fluency scores over a language model.

Three scores, all in natural log space:

  SLOR = (ln p_M(S) - ln p_u(S)) / |S|     LM log-prob, unigram-normalized
  NCE  = ln p_M(S) / |S|                   negative cross-entropy
  PPL  = exp(-NCE)                         perplexity

|S| is the scored length: every prediction event including the end
terminator. Scores can come from the built-in n-gram model or from a table
of externally computed per-sentence log-probabilities (e.g. a neural LM),
which carries its own unigram column so SLOR stays computable.
"""

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from . import subword as sw
from .errors import (
    FormatError,
    MissingExternalScoreError,
    MissingVocabularyError,
    ZeroLengthError,
)
from .ngram_lm import NGramModel

KINDS = ("slor", "nce", "ppl")
UNIT_SPACES = ("word", "wordpiece")

# display names per (kind, unit_space), matching common usage
METRIC_NAMES = {
    ("slor", "word"): "WordSLOR",
    ("slor", "wordpiece"): "WPSLOR",
    ("nce", "word"): "WordNCE",
    ("nce", "wordpiece"): "WPNCE",
    ("ppl", "word"): "WordPPL",
    ("ppl", "wordpiece"): "WPPPL",
}


@dataclass(frozen=True)
class FluencyScore:
    value: float
    kind: str
    unit_space: str


def slor(log_prob_m: float, unigram_log_prob: float, scored_length: int,
         unit_space: str = "word") -> FluencyScore:
    if scored_length < 1:
        raise ZeroLengthError("scored_length must be >= 1")
    value = (log_prob_m - unigram_log_prob) / scored_length
    return FluencyScore(value, "slor", unit_space)


def nce(log_prob_m: float, scored_length: int, unit_space: str = "word") -> FluencyScore:
    if scored_length < 1:
        raise ZeroLengthError("scored_length must be >= 1")
    return FluencyScore(log_prob_m / scored_length, "nce", unit_space)


def ppl(log_prob_m: float, scored_length: int, unit_space: str = "word") -> FluencyScore:
    if scored_length < 1:
        raise ZeroLengthError("scored_length must be >= 1")
    return FluencyScore(math.exp(-log_prob_m / scored_length), "ppl", unit_space)


def _from_parts(kind: str, log_prob_m: float, unigram_log_prob: float,
                scored_length: int, unit_space: str) -> FluencyScore:
    if kind == "slor":
        return slor(log_prob_m, unigram_log_prob, scored_length, unit_space)
    if kind == "nce":
        return nce(log_prob_m, scored_length, unit_space)
    if kind == "ppl":
        return ppl(log_prob_m, scored_length, unit_space)
    raise ValueError(f"unknown score kind {kind!r}")


class ExternalScoreTable:
    """Per-sentence log-probabilities produced outside this toolkit.

    Maps id -> (log_prob, scored_length, unigram_log_prob), natural logs.
    """

    def __init__(self, entries: Mapping[str, tuple[float, int, float]]):
        for key, (lp, length, ulp) in entries.items():
            if lp > 0 or ulp > 0:
                raise FormatError(f"{key}: log-probabilities must be <= 0")
            if length < 1:
                raise ZeroLengthError(f"{key}: scored_length must be >= 1")
        self.entries = dict(entries)

    def __len__(self) -> int:
        return len(self.entries)

    def lookup(self, sentence_id: str) -> tuple[float, int, float]:
        try:
            return self.entries[sentence_id]
        except KeyError:
            raise MissingExternalScoreError(
                f"no external score for id {sentence_id!r}"
            ) from None


def load_external_scores(path) -> ExternalScoreTable:
    """Read a `#extscores v1` TSV: id, log_prob, scored_length, unigram_log_prob."""
    entries = {}
    with open(path, encoding="utf-8") as handle:
        header = handle.readline().rstrip("\n")
        if header != "#extscores v1":
            raise FormatError(f"{path}: bad header {header!r}")
        for lineno, line in enumerate(handle, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) != 4:
                raise FormatError(f"{path}:{lineno}: expected 4 tab-separated fields")
            sid, lp_s, len_s, ulp_s = fields
            try:
                entry = (float(lp_s), int(len_s), float(ulp_s))
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: bad numeric field") from exc
            if sid in entries:
                raise FormatError(f"{path}:{lineno}: duplicate id {sid!r}")
            entries[sid] = entry
    return ExternalScoreTable(entries)


def score_sentence(model: NGramModel, tokens: Sequence[str], kind: str,
                   unit_space: str = "word",
                   vocab: sw.SubwordVocabulary | None = None) -> FluencyScore:
    """Score one normalized token sequence with the built-in model."""
    if unit_space == "wordpiece":
        if vocab is None:
            raise MissingVocabularyError("wordpiece scoring needs a subword vocabulary")
        units = sw.segment_sequence(tokens, vocab)
    elif unit_space == "word":
        units = list(tokens)
    else:
        raise ValueError(f"unknown unit space {unit_space!r}")
    sent = model.sentence_logprob(units)
    unigram = model.unigram_logprob(units)
    return _from_parts(kind, sent.log_prob, unigram, sent.scored_length, unit_space)


def score_dataset(source: NGramModel | ExternalScoreTable,
                  sentences: Mapping[str, Sequence[str]], kind: str,
                  unit_space: str = "word",
                  vocab: sw.SubwordVocabulary | None = None) -> dict[str, FluencyScore]:
    """Score every sentence; returns id -> FluencyScore.

    `sentences` maps id -> normalized tokens. With an ExternalScoreTable the
    token content is ignored; only the ids drive lookups.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown score kind {kind!r}")
    scores: dict[str, FluencyScore] = {}
    if isinstance(source, ExternalScoreTable):
        for sid in sentences:
            lp, length, ulp = source.lookup(sid)
            scores[sid] = _from_parts(kind, lp, ulp, length, unit_space)
        return scores
    for sid, tokens in sentences.items():
        scores[sid] = score_sentence(source, tokens, kind, unit_space, vocab)
    return scores

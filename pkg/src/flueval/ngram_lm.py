"""Count-based n-gram language model with interpolated Kneser-Ney smoothing.

The model supplies two quantities per sentence: the full conditional
log-probability (with <s> padding and a scored </s> terminator) and the
plain MLE unigram log-probability over the same prediction events. Scored
length counts every prediction event including the terminator, identically
for both quantities, so their difference is event-aligned.

Smoothing, for order n >= 2, is interpolated Kneser-Ney with one fixed
absolute discount D:

  top level     p(w|h) = max(c(hw) - D, 0)/c(h.) + D*N1+(h.)/c(h.) * p'(w|h')
  lower levels  same shape over continuation counts
                N1+(.gw) = number of distinct preceding types
  base level    p(w) = max(N1+(.w) - D, 0)/T + D*N1+/T * 1/V

with V the predictable vocabulary size (everything except <s>), so every
vocabulary item keeps positive conditional probability and each level sums
to one exactly. Unseen histories back off one level with no discount.
Order-1 models skip smoothing entirely: their conditional table is the MLE
unigram table, which makes the SLOR-of-unigram-model-is-zero property exact.

A lookup that would be log(0) (only possible for a zero-count <unk> in an
MLE table) is clamped to LOG_FLOOR instead of returning -inf.
"""

import math
import re
from collections import Counter
from typing import Iterable, Sequence

from .errors import CorpusEmptyError, FormatError, InvalidDiscountError
from .fileio import atomic_write_text

BOS = "<s>"
EOS = "</s>"
UNK = "<unk>"
_BACKOFF_MARK = "<bo>"

# clamp for zero-probability lookups; exp(LOG_FLOOR) stays a normal float
LOG_FLOOR = math.log(1e-300)

_HEADER_RE = re.compile(r"^#nglm v1 order=(\d+) discount=([0-9.eE+-]+)$")


class SentenceLogProb:
    """Sentence log-probability plus the number of scored prediction events."""

    __slots__ = ("log_prob", "scored_length")

    def __init__(self, log_prob: float, scored_length: int):
        self.log_prob = log_prob
        self.scored_length = scored_length


class NGramModel:
    """Immutable after construction; safe to query from concurrent workers.

    cond[m] maps an m-gram tuple to its interpolated conditional log-prob at
    level m; backoff[m] maps a history tuple (length m-1) to its log backoff
    weight. mle maps tokens to MLE unigram log-probs over the same events.
    """

    def __init__(self, order: int, discount: float, vocab: set[str],
                 mle: dict[str, float],
                 cond: dict[int, dict[tuple[str, ...], float]],
                 backoff: dict[int, dict[tuple[str, ...], float]],
                 unk_threshold: int = 1):
        self.order = order
        self.discount = discount
        self.vocab = vocab
        self.mle = mle
        self.cond = cond
        self.backoff = backoff
        self.unk_threshold = unk_threshold
        self.predictable_size = len(vocab) - (1 if BOS in vocab else 0)

    def map_token(self, token: str) -> str:
        return token if token in self.vocab else UNK

    def conditional_prob(self, word: str, history: Sequence[str]) -> float:
        """p(word | history). History may be any length; only the last
        order-1 tokens matter. Shorter histories query the backoff levels."""
        w = self.map_token(word)
        h = tuple(self.map_token(t) for t in history)
        if self.order == 1:
            return math.exp(self.mle[w]) if w in self.mle else 0.0
        level = min(len(h), self.order - 1) + 1
        return self._level_prob(w, h[len(h) - (level - 1):] if level > 1 else (), level)

    def _level_prob(self, w: str, h: tuple[str, ...], level: int) -> float:
        if w == BOS:
            return 0.0  # the begin marker is never predicted
        if level == 1:
            logp = self.cond[1].get((w,))
            if logp is not None:
                return math.exp(logp)
            return math.exp(self.backoff[1][()]) / self.predictable_size
        bo = self.backoff[level].get(h)
        if bo is None:
            # unseen history: full backoff, no discounting
            return self._level_prob(w, h[1:], level - 1)
        logp = self.cond[level].get(h + (w,))
        lower = self._level_prob(w, h[1:], level - 1)
        if logp is None:
            return math.exp(bo) * lower
        # stored value already includes the interpolation term
        return math.exp(logp)

    def _event_logprob(self, w: str, h: tuple[str, ...]) -> float:
        if self.order == 1:
            logp = self.mle.get(w)
            return logp if logp is not None else LOG_FLOOR
        p = self._level_prob(w, h, self.order)
        return math.log(p) if p > 0.0 else LOG_FLOOR

    def sentence_logprob(self, tokens: Sequence[str]) -> SentenceLogProb:
        """ln p(tokens, </s>) under the full model, OOV mapped to <unk>."""
        if not tokens:
            raise ValueError("cannot score an empty sequence")
        mapped = [self.map_token(t) for t in tokens]
        padded = [BOS] * (self.order - 1) + mapped + [EOS]
        total = 0.0
        n_hist = self.order - 1
        for i in range(n_hist, len(padded)):
            total += self._event_logprob(padded[i], tuple(padded[i - n_hist:i]))
        return SentenceLogProb(total, len(mapped) + 1)

    def unigram_logprob(self, tokens: Sequence[str]) -> float:
        """Sum of MLE unigram log-probs over the same events, terminator included."""
        if not tokens:
            raise ValueError("cannot score an empty sequence")
        total = 0.0
        for t in tokens:
            logp = self.mle.get(self.map_token(t))
            total += logp if logp is not None else LOG_FLOOR
        logp = self.mle.get(EOS)
        total += logp if logp is not None else LOG_FLOOR
        return total


def train(corpus: Iterable[Sequence[str]], order: int, unk_threshold: int = 1,
          discount: float = 0.75) -> NGramModel:
    """Train an order-n model. Tokens with count < unk_threshold become <unk>."""
    if order < 1:
        raise ValueError(f"order must be >= 1, got {order}")
    if not (0.0 < discount < 1.0):
        raise InvalidDiscountError(f"discount must be in (0, 1), got {discount}")
    sentences = [list(s) for s in corpus if s]
    if not sentences:
        raise CorpusEmptyError("cannot train on an empty corpus")

    token_counts = Counter(t for s in sentences for t in s)
    kept = {t for t, c in token_counts.items() if c >= unk_threshold}
    vocab = kept | {BOS, EOS, UNK}

    def mapped(sentence):
        return [t if t in kept else UNK for t in sentence]

    # raw m-gram counts from padded sentences, skipping grams that end in <s>
    raw: dict[int, Counter] = {m: Counter() for m in range(1, order + 1)}
    for sentence in sentences:
        padded = [BOS] * (order - 1) + mapped(sentence) + [EOS]
        for m in range(1, order + 1):
            for i in range(len(padded) - m + 1):
                gram = tuple(padded[i:i + m])
                if gram[-1] != BOS:
                    raw[m][gram] += 1

    total_events = sum(raw[1].values())
    mle = {w[0]: math.log(c / total_events) for w, c in raw[1].items()}

    if order == 1:
        return NGramModel(order, discount, vocab, mle, {1: dict()}, {1: dict()},
                          unk_threshold)

    predictable = len(vocab) - 1  # everything but <s>
    cond: dict[int, dict[tuple[str, ...], float]] = {}
    backoff: dict[int, dict[tuple[str, ...], float]] = {}

    # continuation counts at level m come from raw counts at level m+1
    level_counts: dict[int, Counter] = {order: raw[order]}
    for m in range(order - 1, 0, -1):
        cont = Counter()
        for gram in raw[m + 1]:
            cont[gram[1:]] += 1
        level_counts[m] = cont

    # base level: discounted continuation unigrams mixed with uniform
    base = level_counts[1]
    t_total = sum(base.values())
    n1_base = len(base)
    lam_base = discount * n1_base / t_total
    cond[1] = {
        gram: math.log(max(c - discount, 0.0) / t_total + lam_base / predictable)
        for gram, c in base.items()
    }
    backoff[1] = {(): math.log(lam_base)}

    def lower_prob(w: str, h: tuple[str, ...], level: int) -> float:
        if level == 1:
            logp = cond[1].get((w,))
            if logp is not None:
                return math.exp(logp)
            return lam_base / predictable
        bo = backoff[level].get(h)
        if bo is None:
            return lower_prob(w, h[1:], level - 1)
        logp = cond[level].get(h + (w,))
        if logp is not None:
            return math.exp(logp)
        return math.exp(bo) * lower_prob(w, h[1:], level - 1)

    for m in range(2, order + 1):
        counts = level_counts[m]
        totals = Counter()
        fanout = Counter()
        for gram, c in counts.items():
            totals[gram[:-1]] += c
            fanout[gram[:-1]] += 1
        cond[m] = {}
        backoff[m] = {}
        for hist in totals:
            lam = discount * fanout[hist] / totals[hist]
            backoff[m][hist] = math.log(lam)
        for gram, c in counts.items():
            hist = gram[:-1]
            lam = discount * fanout[hist] / totals[hist]
            p = (max(c - discount, 0.0) / totals[hist]
                 + lam * lower_prob(gram[-1], hist[1:], m - 1))
            cond[m][gram] = math.log(p)

    return NGramModel(order, discount, vocab, mle, cond, backoff, unk_threshold)


def save(model: NGramModel, path) -> None:
    """Text serialization: header, an MLE block, then per-order blocks of
    `logprob<TAB>ngram` with per-history backoff lines marked <bo>."""
    lines = [f"#nglm v1 order={model.order} discount={model.discount!r}"]
    lines.append("\\mle:")
    for token in sorted(model.mle):
        lines.append(f"{model.mle[token]!r}\t{token}")
    for m in range(1, model.order + 1):
        if m not in model.cond:
            continue
        lines.append(f"\\{m}-grams:")
        for gram in sorted(model.cond[m]):
            lines.append(f"{model.cond[m][gram]!r}\t{' '.join(gram)}")
        for hist in sorted(model.backoff[m]):
            lines.append(f"{model.backoff[m][hist]!r}\t{' '.join(hist + (_BACKOFF_MARK,))}")
    lines.append("\\end\\")
    atomic_write_text(path, "\n".join(lines) + "\n")


def load(path) -> NGramModel:
    with open(path, encoding="utf-8") as handle:
        header = handle.readline().rstrip("\n")
        match = _HEADER_RE.match(header)
        if not match:
            raise FormatError(f"{path}: bad model header: {header!r}")
        order = int(match.group(1))
        discount = float(match.group(2))

        mle: dict[str, float] = {}
        cond: dict[int, dict[tuple[str, ...], float]] = {}
        backoff: dict[int, dict[tuple[str, ...], float]] = {}
        section = None
        saw_end = False
        for lineno, line in enumerate(handle, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            if line == "\\end\\":
                saw_end = True
                break
            if line.startswith("\\"):
                if line == "\\mle:":
                    section = "mle"
                else:
                    gm = re.match(r"^\\(\d+)-grams:$", line)
                    if not gm:
                        raise FormatError(f"{path}:{lineno}: unknown section {line!r}")
                    section = int(gm.group(1))
                    cond[section] = {}
                    backoff[section] = {}
                continue
            if section is None:
                raise FormatError(f"{path}:{lineno}: entry before any section header")
            try:
                value_str, gram_str = line.split("\t")
                value = float(value_str)
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: bad entry {line!r}") from exc
            if section == "mle":
                mle[gram_str] = value
            else:
                gram = tuple(gram_str.split(" ")) if gram_str else ()
                if gram and gram[-1] == _BACKOFF_MARK:
                    backoff[section][gram[:-1]] = value
                else:
                    cond[section][gram] = value
        if not saw_end:
            raise FormatError(f"{path}: missing \\end\\ terminator")

    if not mle:
        raise FormatError(f"{path}: empty MLE block")
    if order >= 2 and (1 not in cond or order not in cond):
        raise FormatError(f"{path}: missing n-gram blocks for order {order}")
    if order == 1:
        cond, backoff = {1: dict()}, {1: dict()}
    vocab = set(mle) | {BOS, EOS, UNK}
    return NGramModel(order, discount, vocab, mle, cond, backoff)

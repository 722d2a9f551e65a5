"""Wordpiece-style subword vocabularies.

A vocabulary starts from the character alphabet observed in the training
corpus (word-initial characters as-is, word-internal characters with a "##"
continuation prefix) and grows by greedily merging the adjacent piece pair
whose merge most increases the corpus unigram log-likelihood under
piece-frequency MLE. Segmentation is greedy longest-match, so every
training-corpus word segments without <unk>.
"""

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import ContainsUnkError, CorpusEmptyError, FormatError, TargetTooSmallError
from .fileio import atomic_write_text

UNK = "<unk>"
CONT = "##"

PieceSeq = list[str]


@dataclass
class SubwordVocabulary:
    """Learned piece inventory. pieces keeps insertion order: <unk>, then the
    character alphabet, then merged pieces in merge order."""

    pieces: list[str]
    target_size: int
    merge_log: list[tuple[str, str, float]] = field(default_factory=list)

    def __post_init__(self):
        self.piece_set = set(self.pieces)
        # longest piece content length, used to bound longest-match scans
        self.max_chars = max(
            (len(p) - 2 if p.startswith(CONT) else len(p))
            for p in self.pieces if p != UNK
        ) if len(self.pieces) > 1 else 1

    def __len__(self) -> int:
        return len(self.pieces)

    def __contains__(self, piece: str) -> bool:
        return piece in self.piece_set


def _char_pieces(token: str) -> list[str]:
    return [token[0]] + [CONT + ch for ch in token[1:]]


def _merge_piece(left: str, right: str) -> str:
    return left + right[len(CONT):]


def _apply_merge(seg: list[str], pair: tuple[str, str], merged: str) -> list[str]:
    """Replace non-overlapping left-to-right occurrences of pair."""
    out = []
    i = 0
    while i < len(seg):
        if i + 1 < len(seg) and seg[i] == pair[0] and seg[i + 1] == pair[1]:
            out.append(merged)
            i += 2
        else:
            out.append(seg[i])
            i += 1
    return out


def _xlogx(c: float) -> float:
    return c * math.log(c) if c > 0 else 0.0


def corpus_log_likelihood(segmentations: dict[str, list[str]],
                          word_freq: Counter) -> float:
    """Corpus unigram log-likelihood under piece-frequency MLE.

    Equals sum over pieces of count*ln(count/N). Used directly by tests to
    verify that every accepted merge raised it.
    """
    counts = Counter()
    for word, seg in segmentations.items():
        freq = word_freq[word]
        for piece in seg:
            counts[piece] += freq
    total = sum(counts.values())
    return sum(_xlogx(c) for c in counts.values()) - _xlogx(total)


def learn_vocabulary(corpus: Iterable[Sequence[str]], target_size: int) -> SubwordVocabulary:
    """Learn a subword vocabulary of at most target_size pieces.

    Merging stops when the vocabulary is full or no candidate merge
    increases the corpus likelihood. Ties break on higher pair frequency,
    then on lexicographically smaller pair, so the result is deterministic.

    Raises CorpusEmptyError for an empty corpus and TargetTooSmallError if
    target_size cannot hold the character alphabet plus <unk>.
    """
    word_freq = Counter()
    for sentence in corpus:
        for token in sentence:
            word_freq[token] += 1
    if not word_freq:
        raise CorpusEmptyError("cannot learn a vocabulary from an empty corpus")

    initial_chars = sorted({w[0] for w in word_freq})
    cont_chars = sorted({CONT + ch for w in word_freq for ch in w[1:]})
    alphabet = initial_chars + cont_chars
    floor = len(alphabet) + 1  # +1 for <unk>
    if target_size < floor:
        raise TargetTooSmallError(
            f"target_size {target_size} is below the alphabet floor {floor}"
        )

    pieces = [UNK] + alphabet
    piece_set = set(pieces)
    segmentations = {w: _char_pieces(w) for w in word_freq}
    merge_log: list[tuple[str, str, float]] = []

    while len(piece_set) < target_size:
        counts = Counter()
        pair_k = Counter()
        for word, seg in segmentations.items():
            freq = word_freq[word]
            for piece in seg:
                counts[piece] += freq
            # pair_k holds non-overlapping occurrence counts, matching what
            # _apply_merge would replace; only self-pairs can overlap, so
            # runs of identical pieces contribute floor(run/2).
            i = 0
            while i + 1 < len(seg):
                if seg[i] == seg[i + 1]:
                    j = i
                    while j + 1 < len(seg) and seg[j + 1] == seg[i]:
                        j += 1
                    pair_k[(seg[i], seg[i])] += ((j - i + 1) // 2) * freq
                    i = j
                else:
                    pair_k[(seg[i], seg[i + 1])] += freq
                    i += 1
        if not pair_k:
            break

        total = sum(counts.values())
        best_key = None
        best_pair = None
        best_gain = 0.0
        for pair, k in pair_k.items():
            left, right = pair
            merged = _merge_piece(left, right)
            c_merged = counts.get(merged, 0)
            if left == right:
                delta_s = (_xlogx(counts[left] - 2 * k) - _xlogx(counts[left])
                           + _xlogx(c_merged + k) - _xlogx(c_merged))
            else:
                delta_s = (_xlogx(counts[left] - k) - _xlogx(counts[left])
                           + _xlogx(counts[right] - k) - _xlogx(counts[right])
                           + _xlogx(c_merged + k) - _xlogx(c_merged))
            gain = delta_s - (_xlogx(total - k) - _xlogx(total))
            key = (-gain, -k, pair)
            if best_key is None or key < best_key:
                best_key = key
                best_pair = pair
                best_gain = gain

        if best_pair is None or best_gain <= 0.0:
            break
        merged = _merge_piece(*best_pair)
        for word in segmentations:
            segmentations[word] = _apply_merge(segmentations[word], best_pair, merged)
        merge_log.append((best_pair[0], best_pair[1], best_gain))
        if merged not in piece_set:
            piece_set.add(merged)
            pieces.append(merged)

    return SubwordVocabulary(pieces, target_size, merge_log)


def segment(token: str, vocab: SubwordVocabulary) -> PieceSeq:
    """Greedy longest-match segmentation of one token.

    Falls back to a single <unk> when any position has no matching piece.
    """
    out: PieceSeq = []
    i = 0
    n = len(token)
    while i < n:
        prefix = "" if i == 0 else CONT
        match_len = 0
        for length in range(min(n - i, vocab.max_chars), 0, -1):
            if prefix + token[i:i + length] in vocab.piece_set:
                match_len = length
                break
        if match_len == 0:
            return [UNK]
        out.append(prefix + token[i:i + match_len])
        i += match_len
    return out


def segment_sequence(tokens: Sequence[str], vocab: SubwordVocabulary) -> PieceSeq:
    """Concatenated per-token segmentations; word boundaries stay recoverable
    through the continuation-marker convention."""
    if not tokens:
        raise ValueError("token sequence must be non-empty")
    pieces: PieceSeq = []
    for token in tokens:
        pieces.extend(segment(token, vocab))
    return pieces


def reconstruct(pieces: Sequence[str]) -> list[str]:
    """Invert segment_sequence. Raises ContainsUnkError on lossy sequences."""
    if UNK in pieces:
        raise ContainsUnkError("cannot reconstruct a sequence containing <unk>")
    tokens: list[str] = []
    for piece in pieces:
        if piece.startswith(CONT):
            if not tokens:
                raise ValueError("piece sequence starts with a continuation piece")
            tokens[-1] += piece[len(CONT):]
        else:
            tokens.append(piece)
    return tokens


def save_vocabulary(vocab: SubwordVocabulary, path) -> None:
    """Write one piece per line under a `#wpvocab v1 target=<N>` header."""
    lines = [f"#wpvocab v1 target={vocab.target_size}"]
    lines.extend(vocab.pieces)
    atomic_write_text(path, "\n".join(lines) + "\n")


def load_vocabulary(path) -> SubwordVocabulary:
    with open(path, encoding="utf-8") as handle:
        header = handle.readline().rstrip("\n")
        if not header.startswith("#wpvocab v1 target="):
            raise FormatError(f"{path}: bad vocabulary header: {header!r}")
        try:
            target = int(header.split("target=", 1)[1])
        except ValueError as exc:
            raise FormatError(f"{path}: bad target size in header") from exc
        pieces = [line.rstrip("\n") for line in handle if line.rstrip("\n")]
    if UNK not in pieces:
        raise FormatError(f"{path}: vocabulary is missing {UNK}")
    return SubwordVocabulary(pieces, target)

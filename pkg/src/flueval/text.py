"""Deterministic sentence normalization shared by every metric and LM trainer.

The rule is deliberately simple so that scores are bit-reproducible across
runs: full Unicode lowercasing, a fixed set of ASCII punctuation characters
split into standalone tokens, and whitespace-run splitting. No sentence
splitting, no truecasing, no linguistic tokenization.
"""

from .errors import EmptyInputError

# Punctuation characters that become standalone tokens. Exactly this set;
# everything else stays attached to its word.
SPLIT_PUNCTUATION = frozenset('.,!?;:"()[]')

TokenSeq = list[str]


def normalize(raw: str) -> TokenSeq:
    """Lowercase and tokenize one sentence (or short paragraph).

    Returns the ordered token list. Tokens are lowercase, contain no
    whitespace, and punctuation from SPLIT_PUNCTUATION appears as
    standalone tokens.

    Raises EmptyInputError if nothing remains after trimming.
    """
    stripped = raw.strip()
    if not stripped:
        raise EmptyInputError("input is empty after trimming whitespace")
    lowered = stripped.lower()
    parts = []
    for ch in lowered:
        if ch in SPLIT_PUNCTUATION:
            parts.append(f" {ch} ")
        else:
            parts.append(ch)
    return "".join(parts).split()


def read_corpus(path) -> list[TokenSeq]:
    """Read a plain-text corpus: UTF-8, one sentence per line.

    Blank lines are skipped; every other line goes through normalize().
    """
    sentences = []
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            if line.strip():
                sentences.append(normalize(line))
    return sentences

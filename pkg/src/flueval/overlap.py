"""Reference-based word-overlap baselines.

ROUGE-L compares a candidate against a reference through their longest
common subsequence; the n-gram metrics (LR2/LR3) compare n-gram sets, with
multiple references pooled as a set union. All token sequences are expected
to come out of text.normalize().
"""

from dataclasses import dataclass
from typing import Sequence

from .errors import NoReferencesError


@dataclass(frozen=True)
class OverlapScore:
    precision: float
    recall: float
    f_score: float
    metric_name: str

    @property
    def value(self) -> float:
        """The scalar this metric reports: recall for *-R names, else F."""
        if self.metric_name.endswith("-R") or self.metric_name.endswith("-R-mult"):
            return self.recall
        return self.f_score


def _f1(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    """Length of the longest common subsequence, standard DP."""
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for tok_a in a:
        cur = [0]
        for j, tok_b in enumerate(b, start=1):
            if tok_a == tok_b:
                cur.append(prev[j - 1] + 1)
            else:
                cur.append(max(prev[j], cur[j - 1]))
        prev = cur
    return prev[len(b)]


def rouge_l(candidate: Sequence[str], reference: Sequence[str],
            metric_name: str = "ROUGE-L") -> OverlapScore:
    """ROUGE-L with balanced (beta = 1) F-score.

    R = LCS / |reference|, P = LCS / |candidate|, F = harmonic mean.
    """
    lcs = lcs_length(candidate, reference)
    recall = lcs / len(reference) if reference else 0.0
    precision = lcs / len(candidate) if candidate else 0.0
    return OverlapScore(precision, recall, _f1(precision, recall), metric_name)


def rouge_l_multi(candidate: Sequence[str], references: Sequence[Sequence[str]],
                  metric_name: str = "ROUGE-L-mult") -> OverlapScore:
    """Best single-reference ROUGE-L by F; ties keep the earliest reference."""
    if not references:
        raise NoReferencesError("rouge_l_multi needs at least one reference")
    best = None
    for ref in references:
        score = rouge_l(candidate, ref, metric_name)
        if best is None or score.f_score > best.f_score:
            best = score
    return best


def _ngram_set(tokens: Sequence[str], n: int) -> set[tuple[str, ...]]:
    return {tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1)}


def ngram_overlap(candidate: Sequence[str], references: Sequence[Sequence[str]],
                  n: int, measure: str = "F") -> OverlapScore:
    """Set-based n-gram overlap against the union of reference n-gram sets.

    R = |cand ∩ union| / |union|, P = |cand ∩ union| / |cand|, F = harmonic
    mean. Sequences shorter than n contribute empty sets. `measure` ("R" or
    "F") only selects the reported metric name, e.g. LR2-R vs LR2-F.
    """
    if not references:
        raise NoReferencesError("ngram_overlap needs at least one reference")
    if n < 1:
        raise ValueError("n must be >= 1")
    if measure not in ("R", "F"):
        raise ValueError(f"measure must be 'R' or 'F', got {measure!r}")
    union: set[tuple[str, ...]] = set()
    for ref in references:
        union |= _ngram_set(ref, n)
    cand = _ngram_set(candidate, n)
    matched = len(cand & union)
    recall = matched / len(union) if union else 0.0
    precision = matched / len(cand) if cand else 0.0
    name = f"LR{n}-{measure}"
    return OverlapScore(precision, recall, _f1(precision, recall), name)

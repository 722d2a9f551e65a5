"""Meta-evaluation statistics.

Pearson correlation, best-linear-fit mean squared error, quadratic weighted
kappa for ordinal rating agreement, and the two one-tailed significance
tests used when comparing metrics (Fisher Z for correlations, Welch t for
squared residuals).

All moments here use the population (1/n) convention. Pearson is invariant
to that choice, and it makes the identity mse = Var(y) * (1 - rho^2) exact.
"""

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

import numpy as np
from scipy.stats import t as student_t

from .errors import (
    DegenerateRError,
    DegenerateVarianceError,
    LengthMismatchError,
    OutOfRangeError,
    TooFewSamplesError,
)


@dataclass(frozen=True, eq=False)
class PairedSamples:
    """Metric scores x paired with human ratings y."""

    x: np.ndarray
    y: np.ndarray

    def __init__(self, x: Sequence[float], y: Sequence[float]):
        x_arr = np.asarray(x, dtype=np.float64)
        y_arr = np.asarray(y, dtype=np.float64)
        if x_arr.shape != y_arr.shape or x_arr.ndim != 1:
            raise LengthMismatchError(
                f"paired samples must be equal-length vectors, got {x_arr.shape} vs {y_arr.shape}"
            )
        if x_arr.size < 3:
            raise TooFewSamplesError("paired samples need n >= 3")
        object.__setattr__(self, "x", x_arr)
        object.__setattr__(self, "y", y_arr)

    @property
    def n(self) -> int:
        return self.x.size


@dataclass(frozen=True)
class LinearFit:
    slope: float
    intercept: float

    def predict(self, x):
        return self.slope * np.asarray(x, dtype=np.float64) + self.intercept


def pearson(samples: PairedSamples) -> float:
    """Sample correlation: covariance over the product of standard deviations."""
    x, y = samples.x, samples.y
    dx = x - x.mean()
    dy = y - y.mean()
    var_x = float(np.mean(dx * dx))
    var_y = float(np.mean(dy * dy))
    if var_x == 0.0 or var_y == 0.0:
        raise DegenerateVarianceError("pearson undefined when x or y is constant")
    rho = float(np.mean(dx * dy)) / math.sqrt(var_x * var_y)
    return max(-1.0, min(1.0, rho))


def fit_linear(samples: PairedSamples) -> LinearFit:
    """Least-squares line x -> y: slope = cov(x, y) / var(x)."""
    x, y = samples.x, samples.y
    dx = x - x.mean()
    var_x = float(np.mean(dx * dx))
    if var_x == 0.0:
        raise DegenerateVarianceError("linear fit undefined when x is constant")
    slope = float(np.mean(dx * (y - y.mean()))) / var_x
    intercept = float(y.mean()) - slope * float(x.mean())
    return LinearFit(slope, intercept)


def mse(samples: PairedSamples) -> float:
    """Mean squared residual of the best linear transform of x against y."""
    fit = fit_linear(samples)
    residuals = samples.y - fit.predict(samples.x)
    return float(np.mean(residuals * residuals))


def squared_residuals(samples: PairedSamples) -> np.ndarray:
    """Per-point squared residuals of the best linear fit; mean equals mse()."""
    fit = fit_linear(samples)
    residuals = samples.y - fit.predict(samples.x)
    return residuals * residuals


def quadratic_weighted_kappa(r1: Sequence[int], r2: Sequence[int],
                             num_categories: int) -> float:
    """Chance-corrected agreement for ordinal ratings in 1..K.

    kappa = 1 - sum(w * O) / sum(w * E) with w_ij = (i - j)^2 / (K - 1)^2,
    O the observed confusion counts and E the outer product of the two
    rating marginals scaled to n. Perfect agreement returns exactly 1.0.
    """
    if len(r1) != len(r2):
        raise LengthMismatchError(f"rating lists differ in length: {len(r1)} vs {len(r2)}")
    if len(r1) == 0:
        raise TooFewSamplesError("need at least one rating pair")
    k = num_categories
    if k < 2:
        raise OutOfRangeError("need at least 2 rating categories")

    observed = np.zeros((k, k), dtype=np.float64)
    for a, b in zip(r1, r2):
        ia, ib = int(a), int(b)
        if ia != a or ib != b or not (1 <= ia <= k) or not (1 <= ib <= k):
            raise OutOfRangeError(f"ratings must be integers in 1..{k}, got ({a}, {b})")
        observed[ia - 1, ib - 1] += 1

    n = float(len(r1))
    expected = np.outer(observed.sum(axis=1), observed.sum(axis=0)) / n
    idx = np.arange(k, dtype=np.float64)
    weights = (idx[:, None] - idx[None, :]) ** 2 / (k - 1) ** 2

    denom = float(np.sum(weights * expected))
    numer = float(np.sum(weights * observed))
    if denom == 0.0:
        # Both raters used a single identical category: treat as full agreement.
        return 1.0
    return 1.0 - numer / denom


def pairwise_weighted_kappa(rating_lists: Sequence[Sequence[int]],
                            num_categories: int) -> float:
    """Mean quadratic weighted kappa over all rater pairs.

    rating_lists holds one list of per-rater ratings per item (raters are
    paired by position). Each rater pair is scored on the items where both
    positions exist; pairs with no overlapping items are skipped.
    """
    max_raters = max((len(r) for r in rating_lists), default=0)
    if max_raters < 2:
        raise TooFewSamplesError("need at least two raters somewhere in the data")
    kappas = []
    for i, j in combinations(range(max_raters), 2):
        r1 = [r[i] for r in rating_lists if len(r) > max(i, j)]
        r2 = [r[j] for r in rating_lists if len(r) > max(i, j)]
        if r1:
            kappas.append(quadratic_weighted_kappa(r1, r2, num_categories))
    if not kappas:
        raise TooFewSamplesError("no rater pair shares any items")
    return float(np.mean(kappas))


def _normal_sf(z: float) -> float:
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def fisher_z_test(r_a: float, r_b: float, n_a: int, n_b: int) -> float:
    """One-tailed p-value for H1: r_a > r_b via the Fisher Z transform.

    z = atanh(r), se = sqrt(1/(n_a - 3) + 1/(n_b - 3)), p = P(Z > stat).
    Equal correlations give exactly p = 0.5.
    """
    for r in (r_a, r_b):
        if abs(r) >= 1.0:
            raise DegenerateRError("Fisher Z transform undefined at |r| = 1")
    if n_a < 4 or n_b < 4:
        raise TooFewSamplesError("Fisher Z test needs n >= 4 in both samples")
    z_a = math.atanh(r_a)
    z_b = math.atanh(r_b)
    se = math.sqrt(1.0 / (n_a - 3) + 1.0 / (n_b - 3))
    return _normal_sf((z_a - z_b) / se)


def two_sample_t_test(a: Sequence[float], b: Sequence[float]) -> float:
    """One-tailed Welch t-test p-value for H1: mean(a) < mean(b).

    Used on squared-residual samples, so a small p means sample a has
    significantly smaller error. Identical samples give exactly p = 0.5.
    """
    a_arr = np.asarray(a, dtype=np.float64)
    b_arr = np.asarray(b, dtype=np.float64)
    if a_arr.size < 2 or b_arr.size < 2:
        raise TooFewSamplesError("Welch t-test needs n >= 2 in both samples")
    var_a = float(np.var(a_arr, ddof=1))
    var_b = float(np.var(b_arr, ddof=1))
    se_sq = var_a / a_arr.size + var_b / b_arr.size
    if se_sq == 0.0:
        raise DegenerateVarianceError("both samples have zero variance")
    stat = (float(a_arr.mean()) - float(b_arr.mean())) / math.sqrt(se_sq)
    if stat == 0.0:
        return 0.5
    df = se_sq ** 2 / (
        (var_a / a_arr.size) ** 2 / (a_arr.size - 1)
        + (var_b / b_arr.size) ** 2 / (b_arr.size - 1)
    )
    return float(student_t.cdf(stat, df))

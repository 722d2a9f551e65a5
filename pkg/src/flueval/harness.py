"""Dataset ingestion, metric-vs-human evaluation, and score combination.

A dataset is JSONL: one record per line with an id, system and domain
labels, the system output, optional references, and 3-5 human fluency
ratings in [1, 3]. Evaluation correlates any id -> score map against the
mean ratings (Pearson and best-linear-fit MSE), overall or grouped by
system/domain, and flags metrics significantly worse than the per-column
best. Reports render as a fixed-width text table and as JSON.

Two combination schemes: an untrained sum of z-scored inputs (ROUGE-LM) and
a trained ridge regression over the same two z-scored features with the
ridge strength picked on a development split.
"""

import json
import random
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import __version__
from .errors import (
    DegenerateVarianceError,
    DuplicateIdError,
    FormatError,
    MissingScoreError,
    ParseError,
    RatingOutOfRangeError,
    SizesExceedDatasetError,
    TooFewSamplesError,
)
from .fileio import atomic_write_text
from .stats import (
    PairedSamples,
    fisher_z_test,
    mse,
    pearson,
    squared_residuals,
    two_sample_t_test,
)

SIGNIFICANCE_LEVEL = 0.05
# |r| is clamped below 1 before the Fisher Z transform so that an identity
# metric (r exactly 1) still yields flags instead of a degenerate test
_R_CLAMP = 1.0 - 1e-12

RIDGE_GRID = (1e-8, 1e-6, 1e-4, 1e-3, 1e-2, 1e-1, 1.0)


@dataclass
class DatasetRecord:
    id: str
    system: str
    domain: str
    output: str
    references: list[str]
    fluency_ratings: list[float]


def _validate_record(rec: DatasetRecord, where: str) -> None:
    if not rec.output.strip():
        raise ParseError(f"{where}: empty output sentence")
    if not rec.fluency_ratings:
        raise ParseError(f"{where}: record has no fluency ratings")
    for rating in rec.fluency_ratings:
        if not (1.0 <= rating <= 3.0):
            raise RatingOutOfRangeError(f"{where}: rating {rating} outside [1, 3]")


def load_dataset(path) -> list[DatasetRecord]:
    """Parse a JSONL dataset, validating ratings and id uniqueness."""
    records = []
    seen = set()
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            where = f"{path}:{lineno}"
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{where}: invalid JSON: {exc.msg}") from exc
            try:
                rec = DatasetRecord(
                    id=str(obj["id"]),
                    system=str(obj["system"]),
                    domain=str(obj["domain"]),
                    output=str(obj["output"]),
                    references=[str(r) for r in obj.get("references", [])],
                    fluency_ratings=[float(r) for r in obj["fluency_ratings"]],
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise ParseError(f"{where}: bad record fields: {exc}") from exc
            if rec.id in seen:
                raise DuplicateIdError(f"{where}: duplicate id {rec.id!r}")
            seen.add(rec.id)
            _validate_record(rec, where)
            records.append(rec)
    return records


def aggregate_ratings(record: DatasetRecord) -> float:
    """Unweighted mean of the human fluency ratings."""
    return sum(record.fluency_ratings) / len(record.fluency_ratings)


# ---------------------------------------------------------------------------
# evaluation reports


@dataclass
class Cell:
    """One (metric, column) entry. pearson/mse are None when degenerate."""

    n: int
    pearson: float | None
    mse: float | None
    sq_residuals: np.ndarray | None = None
    pearson_flag: bool = False
    pearson_p: float | None = None
    mse_flag: bool = False
    mse_p: float | None = None


@dataclass
class MetricRow:
    name: str
    refs: str
    cells: dict[str, Cell]


@dataclass
class MetricReport:
    group_by: str
    columns: list[str]
    samples: dict[str, int]
    rows: list[MetricRow]
    metadata: dict = field(default_factory=dict)


def _column_ids(records: Sequence[DatasetRecord], group_by: str) -> dict[str, list[str]]:
    if group_by == "none":
        return {"overall": [r.id for r in records]}
    if group_by not in ("system", "domain"):
        raise ValueError(f"group_by must be none, system, or domain, got {group_by!r}")
    columns: dict[str, list[str]] = {}
    for rec in records:
        columns.setdefault(getattr(rec, group_by), []).append(rec.id)
    return {key: columns[key] for key in sorted(columns)}


def _make_cell(scores: Mapping[str, float], targets: Mapping[str, float],
               ids: Sequence[str]) -> Cell:
    xs = [scores[i] for i in ids]
    ys = [targets[i] for i in ids]
    try:
        samples = PairedSamples(xs, ys)
        return Cell(len(ids), pearson(samples), mse(samples),
                    squared_residuals(samples))
    except (TooFewSamplesError, DegenerateVarianceError):
        return Cell(len(ids), None, None, None)


def evaluate(metric_scores: Mapping[str, float], records: Sequence[DatasetRecord],
             group_by: str = "none", name: str = "metric",
             refs: str = "0") -> MetricReport:
    """Evaluate one metric against the aggregated ratings.

    Raises MissingScoreError if any record id lacks a score. Columns whose
    score or rating variance is degenerate come back annotated, not as a
    crash.
    """
    return compare_metrics({name: metric_scores}, records, group_by, {name: refs})


def compare_metrics(metrics: Mapping[str, Mapping[str, float]],
                    records: Sequence[DatasetRecord], group_by: str = "none",
                    refs: Mapping[str, str] | None = None) -> MetricReport:
    """Evaluate several metrics together and flag significance vs the best.

    Per column, the best Pearson (highest) and best MSE (lowest) are found;
    every other metric is tested one-tailed against the best (Fisher Z for
    Pearson, Welch t on squared residuals for MSE) and flagged at p < 0.05.
    """
    if not metrics:
        raise ValueError("need at least one metric to evaluate")
    targets = {rec.id: aggregate_ratings(rec) for rec in records}
    for metric_name, scores in metrics.items():
        for rec in records:
            if rec.id not in scores:
                raise MissingScoreError(f"{metric_name}: no score for id {rec.id!r}")

    columns = _column_ids(records, group_by)
    rows = []
    for metric_name, scores in metrics.items():
        cells = {col: _make_cell(scores, targets, ids) for col, ids in columns.items()}
        label = refs.get(metric_name, "-") if refs else "-"
        rows.append(MetricRow(metric_name, label, cells))

    for col in columns:
        _flag_column(rows, col)

    report = MetricReport(
        group_by=group_by,
        columns=list(columns),
        samples={col: len(ids) for col, ids in columns.items()},
        rows=rows,
        metadata={
            "generator": f"flueval {__version__}",
            "significance": f"* = significantly worse than best, one-tailed p < {SIGNIFICANCE_LEVEL}",
        },
    )
    assert sum(report.samples.values()) == len(records)
    return report


def _flag_column(rows: list[MetricRow], col: str) -> None:
    usable = [row for row in rows if row.cells[col].pearson is not None]
    if len(usable) < 2:
        return
    best_r = max(usable, key=lambda row: row.cells[col].pearson)
    best_m = min(usable, key=lambda row: row.cells[col].mse)
    for row in usable:
        cell = row.cells[col]
        if row is not best_r:
            try:
                p = fisher_z_test(
                    max(-_R_CLAMP, min(_R_CLAMP, best_r.cells[col].pearson)),
                    max(-_R_CLAMP, min(_R_CLAMP, cell.pearson)),
                    best_r.cells[col].n, cell.n,
                )
                cell.pearson_p = p
                cell.pearson_flag = p < SIGNIFICANCE_LEVEL
            except TooFewSamplesError:
                pass
        if row is not best_m:
            try:
                p = two_sample_t_test(best_m.cells[col].sq_residuals, cell.sq_residuals)
                cell.mse_p = p
                cell.mse_flag = p < SIGNIFICANCE_LEVEL
            except (TooFewSamplesError, DegenerateVarianceError):
                pass


def _fmt(value: float | None, flag: bool) -> str:
    if value is None:
        return "n/a"
    return f"{value:.3f}{'*' if flag else ''}"


def render_text(report: MetricReport) -> str:
    """Fixed-width table mirroring the metric/refs/Pearson/MSE layout."""
    if report.group_by == "none":
        header = ["metric", "refs", "Pearson", "MSE"]
        table = [header]
        for row in report.rows:
            cell = row.cells["overall"]
            table.append([row.name, row.refs,
                          _fmt(cell.pearson, cell.pearson_flag),
                          _fmt(cell.mse, cell.mse_flag)])
    else:
        cols = report.columns
        header = ["metric", "refs"]
        header += [f"Pearson:{c}" for c in cols] + [f"MSE:{c}" for c in cols]
        counts = ["# samples", ""] + [str(report.samples[c]) for c in cols] * 2
        table = [header, counts]
        for row in report.rows:
            line = [row.name, row.refs]
            line += [_fmt(row.cells[c].pearson, row.cells[c].pearson_flag) for c in cols]
            line += [_fmt(row.cells[c].mse, row.cells[c].mse_flag) for c in cols]
            table.append(line)

    widths = [max(len(r[i]) for r in table) for i in range(len(table[0]))]
    lines = []
    for idx, row in enumerate(table):
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
        if idx == 0:
            lines.append("-" * (sum(widths) + 2 * (len(widths) - 1)))
    lines.append("")
    lines.append(report.metadata["significance"])
    return "\n".join(lines) + "\n"


def render_json(report: MetricReport) -> str:
    payload = {
        "group_by": report.group_by,
        "columns": report.columns,
        "samples": report.samples,
        "metrics": [
            {
                "name": row.name,
                "refs": row.refs,
                "cells": {
                    col: {
                        "n": cell.n,
                        "pearson": cell.pearson,
                        "mse": cell.mse,
                        "pearson_flag": cell.pearson_flag,
                        "pearson_p": cell.pearson_p,
                        "mse_flag": cell.mse_flag,
                        "mse_p": cell.mse_p,
                    }
                    for col, cell in row.cells.items()
                },
            }
            for row in report.rows
        ],
        "metadata": report.metadata,
    }
    return json.dumps(payload, indent=2, ensure_ascii=False) + "\n"


# ---------------------------------------------------------------------------
# score combination


@dataclass
class CombinedMetric:
    """Normalization stats (and, if trained, regression weights) for a
    two-signal combined metric."""

    name: str
    means: tuple[float, float]
    variances: tuple[float, float]
    weights: tuple[float, float] = (1.0, 1.0)
    intercept: float = 0.0
    ridge_strength: float | None = None
    family: str = "sum"

    def apply(self, features: Mapping[str, tuple[float, float]]) -> dict[str, float]:
        (m_a, m_b), (v_a, v_b) = self.means, self.variances
        s_a, s_b = v_a ** 0.5, v_b ** 0.5
        w_a, w_b = self.weights
        return {
            sid: self.intercept + w_a * (a - m_a) / s_a + w_b * (b - m_b) / s_b
            for sid, (a, b) in features.items()
        }


def _mean_var(values: Sequence[float], label: str) -> tuple[float, float]:
    arr = np.asarray(values, dtype=np.float64)
    mean = float(arr.mean())
    var = float(np.mean((arr - mean) ** 2))
    if var == 0.0:
        raise DegenerateVarianceError(f"{label}: zero variance over the fit ids")
    return mean, var


def combine_rouge_lm(rouge_scores: Mapping[str, float],
                     slor_scores: Mapping[str, float],
                     fit_ids: Sequence[str]) -> tuple[CombinedMetric, dict[str, float]]:
    """Sum of the two scores after z-scoring each with fit-set statistics."""
    fit_ids = list(fit_ids)
    if not fit_ids:
        raise TooFewSamplesError("need at least one fit id")
    for sid in fit_ids:
        if sid not in rouge_scores or sid not in slor_scores:
            raise MissingScoreError(f"fit id {sid!r} missing from an input score map")
    shared = [sid for sid in rouge_scores if sid in slor_scores]
    m_r, v_r = _mean_var([rouge_scores[i] for i in fit_ids], "rouge")
    m_s, v_s = _mean_var([slor_scores[i] for i in fit_ids], "lm")
    combined = CombinedMetric("ROUGE-LM", (m_r, m_s), (v_r, v_s))
    values = combined.apply({sid: (rouge_scores[sid], slor_scores[sid]) for sid in shared})
    return combined, values


def train_combiner(features: Mapping[str, tuple[float, float]],
                   targets: Mapping[str, float],
                   train_ids: Sequence[str], dev_ids: Sequence[str]) -> CombinedMetric:
    """Ridge regression on the two z-scored features.

    Feature statistics come from train_ids; the ridge strength is picked
    from a fixed grid by development MSE (ties keep the smaller strength).
    Fully deterministic.
    """
    train_ids, dev_ids = list(train_ids), list(dev_ids)
    if set(train_ids) & set(dev_ids):
        raise ValueError("train and dev ids overlap")
    if len(train_ids) < 10:
        raise TooFewSamplesError(f"need >= 10 training points, got {len(train_ids)}")
    for sid in train_ids + dev_ids:
        if sid not in features or sid not in targets:
            raise MissingScoreError(f"id {sid!r} missing from features or targets")

    m_a, v_a = _mean_var([features[i][0] for i in train_ids], "feature 0")
    m_b, v_b = _mean_var([features[i][1] for i in train_ids], "feature 1")
    s_a, s_b = v_a ** 0.5, v_b ** 0.5

    def design(ids):
        return np.array([
            [(features[i][0] - m_a) / s_a, (features[i][1] - m_b) / s_b] for i in ids
        ])

    x_train = design(train_ids)
    y_train = np.array([targets[i] for i in train_ids])
    x_dev = design(dev_ids)
    y_dev = np.array([targets[i] for i in dev_ids])
    y_mean = float(y_train.mean())

    gram = x_train.T @ x_train / len(train_ids)
    moment = x_train.T @ (y_train - y_mean) / len(train_ids)

    best = None
    for strength in RIDGE_GRID:
        weights = np.linalg.solve(gram + strength * np.eye(2), moment)
        if len(dev_ids) > 0:
            dev_err = float(np.mean((x_dev @ weights + y_mean - y_dev) ** 2))
        else:
            dev_err = float(np.mean((x_train @ weights + y_mean - y_train) ** 2))
        if best is None or dev_err < best[0]:
            best = (dev_err, strength, weights)

    _, strength, weights = best
    return CombinedMetric(
        "trained", (m_a, m_b), (v_a, v_b),
        weights=(float(weights[0]), float(weights[1])),
        intercept=y_mean, ridge_strength=strength, family="ridge",
    )


def split_dataset(records: Sequence[DatasetRecord],
                  sizes: tuple[int, int, int], seed: int) -> tuple[set[str], set[str], set[str]]:
    """Seeded shuffle, then contiguous slices of the requested sizes."""
    n_train, n_dev, n_test = sizes
    if min(sizes) < 0:
        raise ValueError("split sizes must be non-negative")
    total = n_train + n_dev + n_test
    ids = [rec.id for rec in records]
    if total > len(ids):
        raise SizesExceedDatasetError(
            f"requested {total} records but the dataset has {len(ids)}"
        )
    random.Random(seed).shuffle(ids)
    train = set(ids[:n_train])
    dev = set(ids[n_train:n_train + n_dev])
    test = set(ids[n_train + n_dev:total])
    return train, dev, test


# ---------------------------------------------------------------------------
# score files: TSV with a `#scores v1 metric=<name>` header


def write_scores(path, metric_name: str, scores: Mapping[str, float],
                 refs: str | None = None) -> None:
    header = f"#scores v1 metric={metric_name}"
    if refs is not None:
        header += f" refs={refs}"
    lines = [header]
    for sid in sorted(scores):
        lines.append(f"{sid}\t{scores[sid]!r}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_scores(path) -> tuple[str, str, dict[str, float]]:
    """Returns (metric_name, refs_label, id -> value). refs defaults to '-'."""
    with open(path, encoding="utf-8") as handle:
        header = handle.readline().rstrip("\n")
        if not header.startswith("#scores v1 metric="):
            raise FormatError(f"{path}: bad score header {header!r}")
        attrs = header[len("#scores v1 "):].split(" ")
        fields = dict(attr.split("=", 1) for attr in attrs if "=" in attr)
        name = fields["metric"]
        refs = fields.get("refs", "-")
        scores = {}
        for lineno, line in enumerate(handle, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            try:
                sid, value = line.split("\t")
                scores[sid] = float(value)
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: bad score line {line!r}") from exc
    return name, refs, scores

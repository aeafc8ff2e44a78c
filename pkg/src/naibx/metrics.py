"""Evaluation measures for multi-label predictions, plus fold splitting.

Per-run scores: label cardinality of truths and predictions, Hamming
score, zero-one (exact match) score, and set-overlap accuracy, precision
and recall.  Empty-set convention, applied per instance: accuracy,
precision and recall count 1.0 when the prediction and the truth are both
empty, and 0.0 when exactly one of the relevant sets is empty.  Every
serialized report states this convention in its header.

All functions are pure and safe to call from parallel workers.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field, fields

import numpy as np

from .model import LabelUniverse

EMPTY_SET_NOTE = (
    "empty-set convention: per-instance Acc/Pre/Rec = 1 when prediction and "
    "truth are both empty, 0 when exactly one is empty"
)

_COLUMNS = (
    ("lcard_true", "LCard"),
    ("lcard_pred", "LCard^"),
    ("hamming_score", "H_s"),
    ("zero_one_score", "Z_s"),
    ("accuracy", "Acc"),
    ("precision", "Pre"),
    ("recall", "Rec"),
    ("train_seconds", "T_train[s]"),
    ("predict_seconds", "T_pred[s]"),
)


@dataclass
class MetricsReport:
    """Aggregate scores of one evaluation run."""

    lcard_true: float = 0.0
    lcard_pred: float = 0.0
    hamming_score: float = 0.0
    zero_one_score: float = 0.0
    accuracy: float = 0.0
    precision: float = 0.0
    recall: float = 0.0
    train_seconds: float = 0.0
    predict_seconds: float = 0.0

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def evaluate(truths, preds, universe: LabelUniverse) -> MetricsReport:
    """Score a run: element k of ``preds`` against element k of ``truths``.

    The Hamming score of one instance is the fraction of the |universe|
    label positions on which prediction and truth agree (a label counts
    as agreeing when it is in both sets or in neither).
    """
    truths = [frozenset(t) for t in truths]
    preds = [frozenset(p) for p in preds]
    if len(truths) != len(preds):
        raise ValueError(f"{len(truths)} truths vs {len(preds)} predictions")
    if not truths:
        raise ValueError("cannot evaluate an empty run")
    members = frozenset(universe.labels)
    size = universe.size
    hamming = zero_one = acc = pre = rec = 0.0
    card_true = card_pred = 0.0
    for truth, pred in zip(truths, preds):
        stray = (truth | pred) - members
        if stray:
            raise ValueError(f"labels outside the universe: {sorted(map(repr, stray))}")
        card_true += len(truth)
        card_pred += len(pred)
        hamming += 1.0 - len(truth ^ pred) / size
        zero_one += 1.0 if truth == pred else 0.0
        overlap = len(truth & pred)
        union = len(truth | pred)
        acc += overlap / union if union else 1.0
        pre += overlap / len(pred) if pred else (1.0 if not truth else 0.0)
        rec += overlap / len(truth) if truth else (1.0 if not pred else 0.0)
    count = len(truths)
    return MetricsReport(
        lcard_true=card_true / count,
        lcard_pred=card_pred / count,
        hamming_score=hamming / count,
        zero_one_score=zero_one / count,
        accuracy=acc / count,
        precision=pre / count,
        recall=rec / count,
    )


def hamming_loss(truths, preds, universe: LabelUniverse) -> float:
    """Mean fraction of disagreeing label positions (1 - Hamming score)."""
    truths = [frozenset(t) for t in truths]
    preds = [frozenset(p) for p in preds]
    if len(truths) != len(preds):
        raise ValueError(f"{len(truths)} truths vs {len(preds)} predictions")
    if not truths:
        raise ValueError("cannot evaluate an empty run")
    return float(
        np.mean([len(t ^ p) / universe.size for t, p in zip(truths, preds)])
    )


def kfold_indices(n_examples: int, k: int, seed: int) -> list:
    """Deterministic k-fold partition: list of (train, test) index arrays.

    Test folds are disjoint, near-equal, and cover every index exactly
    once; the same seed always yields the same partition.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    if n_examples < k:
        raise ValueError(f"cannot make {k} folds from {n_examples} examples")
    rng = np.random.default_rng(seed)
    order = rng.permutation(n_examples)
    folds = np.array_split(order, k)
    out = []
    for i, fold in enumerate(folds):
        train = np.concatenate([f for j, f in enumerate(folds) if j != i])
        out.append((np.sort(train), np.sort(fold)))
    return out


def mean_report(reports) -> MetricsReport:
    """Fieldwise mean of several reports (the cross-validation summary)."""
    reports = list(reports)
    if not reports:
        raise ValueError("no reports to average")
    values = {
        f.name: float(np.mean([getattr(r, f.name) for r in reports]))
        for f in fields(MetricsReport)
    }
    return MetricsReport(**values)


def report_csv(rows) -> str:
    """Comma-separated serialization of (name, MetricsReport) rows."""
    out = io.StringIO()
    out.write(f"# {EMPTY_SET_NOTE}\n")
    out.write("run," + ",".join(name for name, _ in _COLUMNS) + "\n")
    for name, report in rows:
        values = report.as_dict()
        out.write(name + "," + ",".join(_fmt(values[col]) for col, _ in _COLUMNS) + "\n")
    return out.getvalue()


def report_table(rows) -> str:
    """Aligned text table of (name, MetricsReport) rows."""
    rows = list(rows)
    header = ["run"] + [title for _, title in _COLUMNS]
    body = [
        [name] + [_fmt(report.as_dict()[col]) for col, _ in _COLUMNS]
        for name, report in rows
    ]
    widths = [max(len(line[i]) for line in [header] + body) for i in range(len(header))]
    out = io.StringIO()
    out.write(f"# {EMPTY_SET_NOTE}\n")
    for line in [header] + body:
        out.write("  ".join(cell.ljust(width) for cell, width in zip(line, widths)).rstrip())
        out.write("\n")
    return out.getvalue()


def _fmt(value: float) -> str:
    return f"{value:.3f}"

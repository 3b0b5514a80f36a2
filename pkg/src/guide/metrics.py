"""Ranking metrics for anomaly scores: ROC-AUC, average precision, Recall@K.

Tied scores are always processed as one block, so results do not depend on
sort stability.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np


class MetricError(ValueError):
    """Raised when a metric is undefined for the given labels."""


@dataclass(frozen=True)
class ScoredRanking:
    """Scores indexed by node id and the node order, descending by score
    with ties broken by ascending id."""

    scores: np.ndarray
    order: np.ndarray

    def top(self, k: int) -> np.ndarray:
        return self.order[:k]


def rank_scores(scores) -> ScoredRanking:
    scores = np.asarray(scores, dtype=np.float64)
    if not np.all(np.isfinite(scores)):
        raise MetricError("scores must be finite")
    order = np.lexsort((np.arange(scores.size), -scores))
    return ScoredRanking(scores=scores, order=order)


@dataclass(frozen=True)
class CurvePoints:
    x: np.ndarray
    y: np.ndarray
    auc: float


def _check(scores, labels):
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise MetricError(f"scores {scores.shape} and labels {labels.shape} must be equal-length vectors")
    if not np.all((labels == 0) | (labels == 1)):
        raise MetricError("labels must be 0/1")
    if not np.all(np.isfinite(scores)):
        raise MetricError("scores must be finite")
    return scores, labels.astype(np.int64)


def _threshold_counts(scores, labels):
    """Cumulative (TP, FP) after each distinct score, highest first."""
    order = np.argsort(-scores, kind="mergesort")
    s, y = scores[order], labels[order]
    last = np.r_[np.nonzero(np.diff(s))[0], s.size - 1]
    tp = np.cumsum(y)[last]
    fp = (last + 1) - tp
    return tp, fp


def roc_auc(scores, labels):
    """ROC curve points (fpr, tpr) and trapezoidal area.

    Raises ``MetricError`` unless both classes are present.
    """
    scores, labels = _check(scores, labels)
    pos = int(labels.sum())
    neg = labels.size - pos
    if pos == 0 or neg == 0:
        raise MetricError("ROC-AUC needs at least one positive and one negative label")
    tp, fp = _threshold_counts(scores, labels)
    tpr = np.r_[0.0, tp / pos]
    fpr = np.r_[0.0, fp / neg]
    auc = float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2.0))
    return CurvePoints(fpr, tpr, auc), auc


def pr_auc(scores, labels):
    """Precision-recall points and average precision ``sum (R_k - R_{k-1}) P_k``."""
    scores, labels = _check(scores, labels)
    pos = int(labels.sum())
    if pos == 0:
        raise MetricError("PR-AUC needs at least one positive label")
    tp, fp = _threshold_counts(scores, labels)
    precision = tp / (tp + fp)
    recall = tp / pos
    ap = float(np.sum(np.diff(np.r_[0.0, recall]) * precision))
    return CurvePoints(recall, precision, ap), ap


def recall_at_k(ranking: ScoredRanking, labels, k: int) -> float:
    labels = np.asarray(labels)
    n = labels.size
    if not 1 <= k <= n:
        raise MetricError(f"K must lie in [1, {n}], got {k}")
    total = int(labels.sum())
    if total == 0:
        raise MetricError("Recall@K needs at least one anomaly")
    return int(labels[ranking.top(k)].sum()) / total


def evaluate(scores, labels, ks=(50, 100, 150)):
    """Metrics summary dict plus the ROC and PR curves."""
    ranking = scores if isinstance(scores, ScoredRanking) else rank_scores(scores)
    roc, roc_value = roc_auc(ranking.scores, labels)
    pr, pr_value = pr_auc(ranking.scores, labels)
    summary = {
        "roc_auc": roc_value,
        "pr_auc": pr_value,
        "recall_at": {str(k): recall_at_k(ranking, labels, k) for k in ks},
    }
    return summary, roc, pr


def save_curve(curve: CurvePoints, path, header: str):
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for a, b in zip(curve.x, curve.y):
            fh.write(f"{float(a)!r},{float(b)!r}\n")


def save_summary(summary: dict, path):
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")


def save_scores(scores, path):
    """One score per line, in node order, written with full precision."""
    with open(path, "w") as fh:
        fh.writelines(f"{float(v)!r}\n" for v in scores)

"""Scoring metrics with explicit task and input requirements.

Regression metrics consume point predictions; classification metrics
consume label indices, positive-class scores, or full probability
matrices as declared per metric. Undefined cases (constant target for r2,
single-class truth for roc_auc) raise MetricUndefinedError rather than
returning a silent placeholder.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import MetricUndefinedError, WorkbenchError

HIGHER = "higher-better"
LOWER = "lower-better"

NEEDS_VALUES = "values"
NEEDS_LABELS = "labels"
NEEDS_SCORES = "scores"
NEEDS_PROBA = "proba"

LOG_LOSS_EPS = 1e-15


@dataclass(frozen=True)
class Metric:
    metric_id: str
    direction: str
    tasks: tuple[str, ...]
    needs: str

    def better(self, a: float | None, b: float | None) -> bool:
        """True when a strictly improves on b; anything beats None."""
        if a is None:
            return False
        if b is None:
            return True
        return a > b if self.direction == HIGHER else a < b


def _check_lengths(y_true, y_pred):
    if len(y_true) != len(y_pred):
        raise WorkbenchError(
            f"length mismatch: {len(y_true)} true vs {len(y_pred)} predicted"
        )
    if len(y_true) == 0:
        raise MetricUndefinedError("no rows to score")


def r2(y_true, y_pred) -> float:
    _check_lengths(y_true, y_pred)
    y_true = np.asarray(y_true, dtype=float)
    y_pred = np.asarray(y_pred, dtype=float)
    sst = float(((y_true - y_true.mean()) ** 2).sum())
    if sst == 0.0:
        raise MetricUndefinedError("r2 is undefined for a constant target")
    sse = float(((y_true - y_pred) ** 2).sum())
    return 1.0 - sse / sst


def mae(y_true, y_pred) -> float:
    _check_lengths(y_true, y_pred)
    return float(np.abs(np.asarray(y_true, float) - np.asarray(y_pred, float)).mean())


def rmse(y_true, y_pred) -> float:
    _check_lengths(y_true, y_pred)
    diff = np.asarray(y_true, float) - np.asarray(y_pred, float)
    return float(np.sqrt((diff ** 2).mean()))


def accuracy(y_true, y_pred) -> float:
    _check_lengths(y_true, y_pred)
    return float((np.asarray(y_true) == np.asarray(y_pred)).mean())


def balanced_accuracy(y_true, y_pred) -> float:
    _check_lengths(y_true, y_pred)
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    recalls = []
    for c in np.unique(y_true):
        mask = y_true == c
        recalls.append(float((y_pred[mask] == c).mean()))
    return float(np.mean(recalls))


def roc_auc(y_true, scores) -> float:
    """Area under the ROC curve via tie-averaged ranks.

    Equals the Mann-Whitney pair statistic: ties between a positive and a
    negative score count one half.
    """
    _check_lengths(y_true, scores)
    y_true = np.asarray(y_true).astype(int)
    scores = np.asarray(scores, dtype=float)
    n_pos = int((y_true == 1).sum())
    n_neg = int((y_true == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise MetricUndefinedError("roc_auc needs both classes present")
    order = np.argsort(scores, kind="mergesort")
    ranks = np.empty(len(scores))
    sorted_scores = scores[order]
    i = 0
    while i < len(scores):
        j = i
        while j + 1 < len(scores) and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0  # average rank, 1-based
        i = j + 1
    rank_sum = float(ranks[y_true == 1].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def macro_f1(y_true, y_pred) -> float:
    _check_lengths(y_true, y_pred)
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    f1s = []
    for c in np.unique(y_true):
        tp = float(((y_pred == c) & (y_true == c)).sum())
        fp = float(((y_pred == c) & (y_true != c)).sum())
        fn = float(((y_pred != c) & (y_true == c)).sum())
        precision = tp / (tp + fp) if tp + fp > 0 else 0.0
        recall = tp / (tp + fn) if tp + fn > 0 else 0.0
        f1s.append(2 * precision * recall / (precision + recall)
                   if precision + recall > 0 else 0.0)
    return float(np.mean(f1s))


def log_loss(y_true, proba) -> float:
    y_true = np.asarray(y_true).astype(int)
    proba = np.asarray(proba, dtype=float)
    _check_lengths(y_true, proba)
    p = np.clip(proba[np.arange(len(y_true)), y_true],
                LOG_LOSS_EPS, 1.0 - LOG_LOSS_EPS)
    return float(-np.log(p).mean())


_REGRESSION = ("regression",)
_CLASSIFICATION = ("binary", "categorical")

METRICS: dict[str, Metric] = {
    "r2": Metric("r2", HIGHER, _REGRESSION, NEEDS_VALUES),
    "mae": Metric("mae", LOWER, _REGRESSION, NEEDS_VALUES),
    "rmse": Metric("rmse", LOWER, _REGRESSION, NEEDS_VALUES),
    "accuracy": Metric("accuracy", HIGHER, _CLASSIFICATION, NEEDS_LABELS),
    "balanced_accuracy": Metric("balanced_accuracy", HIGHER, _CLASSIFICATION,
                                NEEDS_LABELS),
    "roc_auc": Metric("roc_auc", HIGHER, ("binary",), NEEDS_SCORES),
    "macro_f1": Metric("macro_f1", HIGHER, _CLASSIFICATION, NEEDS_LABELS),
    "log_loss": Metric("log_loss", LOWER, _CLASSIFICATION, NEEDS_PROBA),
}

_FUNCS = {
    "r2": r2, "mae": mae, "rmse": rmse,
    "accuracy": accuracy, "balanced_accuracy": balanced_accuracy,
    "roc_auc": roc_auc, "macro_f1": macro_f1, "log_loss": log_loss,
}


def get_metric(metric_id: str) -> Metric:
    try:
        return METRICS[metric_id]
    except KeyError:
        known = ", ".join(sorted(METRICS))
        raise WorkbenchError(
            f"unknown metric {metric_id!r} (known: {known})"
        ) from None


def score(metric_id: str, y_true, y_pred) -> float:
    """Score predictions already shaped for the metric's needs."""
    get_metric(metric_id)
    return float(_FUNCS[metric_id](y_true, y_pred))


def prediction_input(metric: Metric, predictions) -> np.ndarray:
    """Pull the representation a metric consumes out of a Predictions object."""
    if metric.needs == NEEDS_VALUES or metric.needs == NEEDS_LABELS:
        return predictions.values
    if predictions.proba is None:
        raise WorkbenchError(
            f"{metric.metric_id} needs probabilities, model produced none"
        )
    if metric.needs == NEEDS_SCORES:
        return predictions.proba[:, 1]  # positive class is the last level
    return predictions.proba

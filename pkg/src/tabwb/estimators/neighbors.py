"""k-nearest-neighbors by Euclidean distance.

Distance ties are broken by the lower training row position so predictions
are deterministic. k is clamped to the training size.
"""

from __future__ import annotations

import numpy as np

from ..errors import WorkbenchError
from ..params import IntRange
from .base import (
    TASK_BINARY,
    TASK_CATEGORICAL,
    TASK_REGRESSION,
    EstimatorInfo,
    FittedEstimator,
    Matrix,
    Predictions,
    Target,
    register,
    SCOPE_ALL,
    MODEL,
)


def _knn_fit(info, params, X: Matrix, y: Target) -> FittedEstimator:
    k = params["k"]
    if not (isinstance(k, int) and k >= 1):
        raise WorkbenchError("knn: k must be an integer >= 1")
    A = X.to_numeric("knn")
    return FittedEstimator(
        "knn", params, X.schema(),
        {"X": A, "y": np.array(y.values), "task": y.task},
        target_levels=y.levels,
    )


def _knn_predict(f: FittedEstimator, X: Matrix) -> Predictions:
    A = X.to_numeric("knn")
    train = f.state["X"]
    y = f.state["y"]
    k = min(f.params["k"], train.shape[0])
    d2 = ((A[:, None, :] - train[None, :, :]) ** 2).sum(axis=2)
    levels = f.target_levels
    n = A.shape[0]
    if levels is None:
        values = np.empty(n)
    else:
        proba = np.empty((n, len(levels)))
    for i in range(n):
        # sort by distance, then training position, take the k closest
        order = np.lexsort((np.arange(train.shape[0]), d2[i]))[:k]
        if levels is None:
            values[i] = y[order].mean()
        else:
            counts = np.bincount(y[order].astype(int), minlength=len(levels))
            proba[i] = counts / k
    if levels is None:
        return Predictions(TASK_REGRESSION, values)
    task = TASK_BINARY if len(levels) == 2 else TASK_CATEGORICAL
    return Predictions(task, proba.argmax(axis=1), proba=proba, levels=levels)


register(EstimatorInfo(
    estimator_id="knn",
    kind=MODEL,
    tasks=(TASK_REGRESSION, TASK_BINARY, TASK_CATEGORICAL),
    defaults={"k": 5},
    preset={"k": IntRange(1, 32, "log")},
    default_scope=SCOPE_ALL,
    supervised=True,
    fit=_knn_fit,
    predict=_knn_predict,
))

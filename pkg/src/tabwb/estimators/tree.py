"""Decision tree and bagged forest.

Trees are grown greedily: continuous features split at midpoints between
distinct consecutive sorted values (x <= threshold goes left), categorical
features split one level against the rest. The split minimizing total
child impurity (sum of squared errors for regression, Gini mass for
classification) wins; ties keep the first candidate in scan order
(features ascending, then thresholds/levels ascending). Zero-gain splits
are allowed so patterns like XOR are still separable at depth two;
recursion terminates because both children are always non-empty.

The forest bags rows and subsamples features per split. With one tree, no
bootstrap and all features it degenerates to the plain tree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..canon import derive_seed
from ..errors import WorkbenchError
from ..params import Choice, IntRange
from .base import (
    KIND_CONTINUOUS,
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


@dataclass
class _Node:
    feature: int = -1
    threshold: float | None = None  # continuous split
    level: str | None = None        # categorical split: equal goes left
    left: "_Node | None" = None
    right: "_Node | None" = None
    value: np.ndarray | float = 0.0
    n: int = 0

    @property
    def is_leaf(self) -> bool:
        return self.left is None


def _check_no_missing(X: Matrix, context: str) -> None:
    for name, kind, col in zip(X.names, X.kinds, X.cols):
        missing = np.isnan(col).any() if kind == KIND_CONTINUOUS \
            else any(v is None for v in col)
        if missing:
            raise WorkbenchError(
                f"{context}: column {name!r} has missing values; impute first"
            )


def _leaf_value(y: np.ndarray, n_classes: int):
    if n_classes == 0:
        return float(y.mean())
    counts = np.bincount(y.astype(int), minlength=n_classes).astype(float)
    return counts / counts.sum()


def _impurity(y: np.ndarray, n_classes: int) -> float:
    # regression: SSE; classification: Gini mass n * (1 - sum p^2)
    if n_classes == 0:
        return float(((y - y.mean()) ** 2).sum())
    counts = np.bincount(y.astype(int), minlength=n_classes).astype(float)
    n = counts.sum()
    return float(n - (counts ** 2).sum() / n)


def _best_continuous(values, y, n_classes):
    """Best threshold for one continuous feature: (score, threshold) or None."""
    order = np.argsort(values, kind="stable")
    v = values[order]
    ys = y[order]
    n = len(v)
    cuts = np.where(v[:-1] < v[1:])[0]
    if cuts.size == 0:
        return None
    if n_classes == 0:
        s = np.cumsum(ys)
        s2 = np.cumsum(ys ** 2)
        total, total2 = s[-1], s2[-1]
        nl = cuts + 1.0
        nr = n - nl
        sse_l = s2[cuts] - s[cuts] ** 2 / nl
        sse_r = (total2 - s2[cuts]) - (total - s[cuts]) ** 2 / nr
        scores = sse_l + sse_r
    else:
        onehot = np.zeros((n, n_classes))
        onehot[np.arange(n), ys.astype(int)] = 1.0
        cum = np.cumsum(onehot, axis=0)
        totals = cum[-1]
        nl = cuts + 1.0
        nr = n - nl
        left = cum[cuts]
        right = totals - left
        scores = (nl - (left ** 2).sum(axis=1) / nl) \
            + (nr - (right ** 2).sum(axis=1) / nr)
    best = int(np.argmin(scores))
    threshold = float((v[cuts[best]] + v[cuts[best] + 1]) / 2.0)
    return float(scores[best]), threshold


def _best_categorical(values, y, n_classes):
    """Best one-vs-rest level for one categorical feature: (score, level) or None."""
    levels = sorted(set(values.tolist()))
    if len(levels) < 2:
        return None
    best = None
    for level in levels:
        mask = values == level
        yl, yr = y[mask], y[~mask]
        score = _impurity(yl, n_classes) + _impurity(yr, n_classes)
        if best is None or score < best[0]:
            best = (score, level)
    return best


def _grow(X: Matrix, y: np.ndarray, idx: np.ndarray, depth: int,
          max_depth, min_samples_split: int, n_classes: int,
          max_features: int, rng: np.random.Generator | None) -> _Node:
    node = _Node(value=_leaf_value(y[idx], n_classes), n=len(idx))
    if depth >= max_depth or len(idx) < min_samples_split:
        return node
    if _impurity(y[idx], n_classes) == 0.0:
        return node

    if rng is not None and max_features < X.n_cols:
        features = np.sort(rng.choice(X.n_cols, size=max_features, replace=False))
    else:
        features = range(X.n_cols)

    best = None  # (score, feature, threshold, level)
    yi = y[idx]
    for j in features:
        col = X.cols[j][idx]
        if X.kinds[j] == KIND_CONTINUOUS:
            found = _best_continuous(col, yi, n_classes)
            if found and (best is None or found[0] < best[0]):
                best = (found[0], j, found[1], None)
        else:
            found = _best_categorical(col, yi, n_classes)
            if found and (best is None or found[0] < best[0]):
                best = (found[0], j, None, found[1])
    if best is None:
        return node

    _, j, threshold, level = best
    col = X.cols[j][idx]
    go_left = (col <= threshold) if threshold is not None else (col == level)
    node.feature = j
    node.threshold = threshold
    node.level = level
    node.left = _grow(X, y, idx[go_left], depth + 1, max_depth,
                      min_samples_split, n_classes, max_features, rng)
    node.right = _grow(X, y, idx[~go_left], depth + 1, max_depth,
                       min_samples_split, n_classes, max_features, rng)
    return node


def _apply(node: _Node, X: Matrix, idx: np.ndarray, out: np.ndarray) -> None:
    if node.is_leaf:
        out[idx] = node.value
        return
    col = X.cols[node.feature][idx]
    go_left = (col <= node.threshold) if node.threshold is not None \
        else (col == node.level)
    _apply(node.left, X, idx[go_left], out)
    _apply(node.right, X, idx[~go_left], out)


def _resolve_max_features(spec, n_cols: int) -> int:
    if spec == "all":
        return n_cols
    if spec == "sqrt":
        return max(1, int(math.sqrt(n_cols)))
    if spec == "log2":
        return max(1, int(math.log2(n_cols))) if n_cols > 1 else 1
    if isinstance(spec, int) and not isinstance(spec, bool) and spec >= 1:
        return min(spec, n_cols)
    raise WorkbenchError(f"invalid max_features {spec!r}")


def _tree_params_ok(params) -> tuple:
    max_depth = params["max_depth"]
    if max_depth is None:
        max_depth = math.inf
    elif not (isinstance(max_depth, int) and max_depth >= 0):
        raise WorkbenchError("max_depth must be a non-negative integer or null")
    mss = params["min_samples_split"]
    if not (isinstance(mss, int) and mss >= 2):
        raise WorkbenchError("min_samples_split must be an integer >= 2")
    return max_depth, mss


def _grow_from_target(X, y: Target, idx, max_depth, mss, max_features, rng):
    n_classes = 0 if y.task == TASK_REGRESSION else y.n_classes
    yv = y.values.astype(float) if n_classes == 0 else y.values.astype(int)
    return _grow(X, yv, idx, 0, max_depth, mss, n_classes, max_features, rng)


def _dtree_fit(info, params, X: Matrix, y: Target) -> FittedEstimator:
    _check_no_missing(X, "dtree")
    max_depth, mss = _tree_params_ok(params)
    root = _grow_from_target(X, y, np.arange(X.n_rows), max_depth, mss,
                             X.n_cols, None)
    return FittedEstimator("dtree", params, X.schema(), {"root": root},
                           target_levels=y.levels)


def _predict_trees(roots, X: Matrix, levels) -> Predictions:
    _check_no_missing(X, "tree predict")
    n = X.n_rows
    idx = np.arange(n)
    if levels is None:
        acc = np.zeros(n)
        for root in roots:
            out = np.empty(n)
            _apply(root, X, idx, out)
            acc += out
        return Predictions(TASK_REGRESSION, acc / len(roots))
    acc = np.zeros((n, len(levels)))
    for root in roots:
        out = np.empty((n, len(levels)))
        _apply(root, X, idx, out)
        acc += out
    proba = acc / len(roots)
    task = TASK_BINARY if len(levels) == 2 else TASK_CATEGORICAL
    return Predictions(task, proba.argmax(axis=1), proba=proba, levels=levels)


def _dtree_predict(f: FittedEstimator, X: Matrix) -> Predictions:
    return _predict_trees([f.state["root"]], X, f.target_levels)


def _forest_fit(info, params, X: Matrix, y: Target) -> FittedEstimator:
    _check_no_missing(X, "forest")
    max_depth, mss = _tree_params_ok(params)
    n_trees = params["n_trees"]
    if not (isinstance(n_trees, int) and n_trees >= 1):
        raise WorkbenchError("n_trees must be an integer >= 1")
    max_features = _resolve_max_features(params["max_features"], X.n_cols)
    bootstrap = bool(params["bootstrap"])
    idx_all = np.arange(X.n_rows)
    roots = []
    for i in range(n_trees):
        rng = np.random.default_rng(derive_seed(params["seed"], "tree", i))
        idx = rng.integers(0, X.n_rows, size=X.n_rows) if bootstrap else idx_all
        sub_rng = rng if max_features < X.n_cols else None
        roots.append(_grow_from_target(X, y, np.asarray(idx), max_depth, mss,
                                       max_features, sub_rng))
    return FittedEstimator("forest", params, X.schema(), {"roots": roots},
                           target_levels=y.levels)


def _forest_predict(f: FittedEstimator, X: Matrix) -> Predictions:
    return _predict_trees(f.state["roots"], X, f.target_levels)


register(EstimatorInfo(
    estimator_id="dtree",
    kind=MODEL,
    tasks=(TASK_REGRESSION, TASK_BINARY, TASK_CATEGORICAL),
    defaults={"max_depth": None, "min_samples_split": 2},
    preset={"max_depth": Choice((None, 2, 4, 8, 16)),
            "min_samples_split": IntRange(2, 32, "log")},
    default_scope=SCOPE_ALL,
    supervised=True,
    fit=_dtree_fit,
    predict=_dtree_predict,
))

register(EstimatorInfo(
    estimator_id="forest",
    kind=MODEL,
    tasks=(TASK_REGRESSION, TASK_BINARY, TASK_CATEGORICAL),
    defaults={"n_trees": 10, "max_depth": None, "min_samples_split": 2,
              "max_features": "sqrt", "bootstrap": True},
    preset={"n_trees": IntRange(8, 128, "log"),
            "max_features": Choice(("sqrt", "log2", "all"))},
    default_scope=SCOPE_ALL,
    supervised=True,
    seeded=True,
    fit=_forest_fit,
    predict=_forest_predict,
))

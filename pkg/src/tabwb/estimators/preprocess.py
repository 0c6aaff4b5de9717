"""Transformers: scalers, imputers, one-hot encoding, feature selectors.

All fit statistics are computed over non-missing training cells only.
Transforms report how many output columns each input column produced so the
pipeline can stitch scoped outputs back into the full matrix in original
column order.
"""

from __future__ import annotations

import numpy as np

from ..errors import WorkbenchError
from ..params import Fixed, IntRange
from .base import (
    KIND_CATEGORICAL,
    KIND_CONTINUOUS,
    EstimatorInfo,
    FittedEstimator,
    Matrix,
    Target,
    register,
    SCOPE_CATEGORICAL,
    SCOPE_CONTINUOUS,
    ENCODER,
    IMPUTER,
    SCALER,
    SELECTOR,
)


def _require_continuous(X: Matrix, estimator_id: str) -> None:
    for name, kind in zip(X.names, X.kinds):
        if kind != KIND_CONTINUOUS:
            raise WorkbenchError(
                f"{estimator_id}: column {name!r} is categorical;"
                " scope the step to continuous-only"
            )


def _observed(col: np.ndarray, name: str, estimator_id: str) -> np.ndarray:
    vals = col[~np.isnan(col)]
    if vals.size == 0:
        raise WorkbenchError(
            f"{estimator_id}: column {name!r} has no observed training values"
        )
    return vals


def _center_scale_fit(estimator_id, X, center_fn, spread_fn):
    _require_continuous(X, estimator_id)
    centers, spreads = [], []
    for name, col in zip(X.names, X.cols):
        vals = _observed(col, name, estimator_id)
        centers.append(center_fn(vals))
        spread = spread_fn(vals)
        spreads.append(spread if spread > 0 else 1.0)
    return FittedEstimator(
        estimator_id, {}, X.schema(),
        {"centers": np.array(centers), "spreads": np.array(spreads)},
        out_counts=(1,) * X.n_cols,
    )


def _center_scale_transform(f: FittedEstimator, X: Matrix) -> Matrix:
    cols = tuple(
        (col - c) / s
        for col, c, s in zip(X.cols, f.state["centers"], f.state["spreads"])
    )
    return Matrix(X.names, X.kinds, cols)


def _std_fit(info, params, X, y=None):
    return _center_scale_fit(
        "scaler_standard", X,
        lambda v: float(v.mean()),
        lambda v: float(v.std()),  # population std
    )


def _robust_fit(info, params, X, y=None):
    return _center_scale_fit(
        "scaler_robust", X,
        lambda v: float(np.quantile(v, 0.5)),
        lambda v: float(np.quantile(v, 0.75) - np.quantile(v, 0.25)),
    )


def _impute_fit(estimator_id, X, stat_fn):
    _require_continuous(X, estimator_id)
    fills = [stat_fn(_observed(col, name, estimator_id))
             for name, col in zip(X.names, X.cols)]
    return FittedEstimator(
        estimator_id, {}, X.schema(), {"fills": np.array(fills)},
        out_counts=(1,) * X.n_cols,
    )


def _impute_transform(f: FittedEstimator, X: Matrix) -> Matrix:
    cols = []
    for col, fill in zip(X.cols, f.state["fills"]):
        out = np.array(col)
        out[np.isnan(out)] = fill
        cols.append(out)
    return Matrix(X.names, X.kinds, tuple(cols))


def _mean_fit(info, params, X, y=None):
    return _impute_fit("impute_mean", X, lambda v: float(v.mean()))


def _median_fit(info, params, X, y=None):
    return _impute_fit("impute_median", X, lambda v: float(np.quantile(v, 0.5)))


def _onehot_fit(info, params, X, y=None):
    for name, kind in zip(X.names, X.kinds):
        if kind != KIND_CATEGORICAL:
            raise WorkbenchError(
                f"onehot: column {name!r} is continuous;"
                " scope the step to categorical-only"
            )
    levels = []
    for col in X.cols:
        levels.append(tuple(sorted({v for v in col.tolist() if v is not None})))
    return FittedEstimator(
        "onehot", {}, X.schema(), {"levels": tuple(levels)},
        out_counts=tuple(len(lv) for lv in levels),
    )


def _onehot_transform(f: FittedEstimator, X: Matrix) -> Matrix:
    names, kinds, cols = [], [], []
    for name, col, levels in zip(X.names, X.cols, f.state["levels"]):
        for level in levels:  # unseen or missing values become all zeros
            names.append(f"{name}={level}")
            kinds.append(KIND_CONTINUOUS)
            cols.append((col == level).astype(float))
    return Matrix(tuple(names), tuple(kinds), tuple(cols))


def _kept_transform(f: FittedEstimator, X: Matrix) -> Matrix:
    kept = [i for i, keep in enumerate(f.state["kept"]) if keep]
    return X.select(kept)


def _variance_fit(info, params, X, y=None):
    _require_continuous(X, "select_variance")
    threshold = float(params["threshold"])
    if threshold < 0:
        raise WorkbenchError("select_variance: threshold must be >= 0")
    kept = []
    for name, col in zip(X.names, X.cols):
        vals = _observed(col, name, "select_variance")
        kept.append(bool(vals.var() > threshold))
    return FittedEstimator(
        "select_variance", params, X.schema(), {"kept": tuple(kept)},
        out_counts=tuple(int(k) for k in kept),
    )


def _abs_pearson(x: np.ndarray, y: np.ndarray) -> float:
    mask = ~np.isnan(x)
    xm, ym = x[mask], y[mask]
    if xm.size < 2:
        return 0.0
    xc = xm - xm.mean()
    yc = ym - ym.mean()
    denom = np.sqrt((xc ** 2).sum() * (yc ** 2).sum())
    if denom == 0:
        return 0.0
    return float(abs((xc * yc).sum() / denom))


def _univariate_fit(info, params, X, y: Target):
    _require_continuous(X, "select_univariate")
    k = params["k"]
    if not (isinstance(k, int) and k >= 1):
        raise WorkbenchError("select_univariate: k must be an integer >= 1")
    # classification targets are compared through their level indices
    yv = y.values.astype(float)
    scores = [_abs_pearson(col, yv) for col in X.cols]
    order = sorted(range(len(scores)), key=lambda i: (-scores[i], i))
    chosen = set(order[:k])
    kept = tuple(i in chosen for i in range(len(scores)))
    return FittedEstimator(
        "select_univariate", params, X.schema(),
        {"kept": kept, "scores": tuple(scores)},
        out_counts=tuple(int(kp) for kp in kept),
    )


register(EstimatorInfo(
    estimator_id="scaler_standard", kind=SCALER, tasks=(),
    defaults={}, preset={}, default_scope=SCOPE_CONTINUOUS,
    fit=_std_fit, transform=_center_scale_transform,
))

register(EstimatorInfo(
    estimator_id="scaler_robust", kind=SCALER, tasks=(),
    defaults={}, preset={}, default_scope=SCOPE_CONTINUOUS,
    fit=_robust_fit, transform=_center_scale_transform,
))

register(EstimatorInfo(
    estimator_id="impute_mean", kind=IMPUTER, tasks=(),
    defaults={}, preset={}, default_scope=SCOPE_CONTINUOUS,
    fit=_mean_fit, transform=_impute_transform,
))

register(EstimatorInfo(
    estimator_id="impute_median", kind=IMPUTER, tasks=(),
    defaults={}, preset={}, default_scope=SCOPE_CONTINUOUS,
    fit=_median_fit, transform=_impute_transform,
))

register(EstimatorInfo(
    estimator_id="onehot", kind=ENCODER, tasks=(),
    defaults={}, preset={}, default_scope=SCOPE_CATEGORICAL,
    fit=_onehot_fit, transform=_onehot_transform,
))

register(EstimatorInfo(
    estimator_id="select_variance", kind=SELECTOR, tasks=(),
    defaults={"threshold": 0.0},
    preset={"threshold": Fixed(0.0)},
    default_scope=SCOPE_CONTINUOUS,
    fit=_variance_fit, transform=_kept_transform,
))

register(EstimatorInfo(
    estimator_id="select_univariate", kind=SELECTOR, tasks=(),
    defaults={"k": 10},
    preset={"k": IntRange(1, 64, "log")},
    default_scope=SCOPE_CONTINUOUS,
    supervised=True,
    fit=_univariate_fit, transform=_kept_transform,
))

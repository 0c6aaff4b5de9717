"""Estimator registry and the fit/predict/transform entry points.

Every estimator is addressed by a string id. Fitting validates parameters
against the registry, records the input schema, and returns an immutable
FittedEstimator; predict and transform refuse inputs whose schema differs
from what fit saw.
"""

from __future__ import annotations


from ..errors import WorkbenchError
from .base import (
    KIND_CATEGORICAL,
    KIND_CONTINUOUS,
    MODEL,
    SCOPE_ALL,
    SCOPE_CATEGORICAL,
    SCOPE_CONTINUOUS,
    SCOPES,
    STEP_KINDS,
    TASK_BINARY,
    TASK_CATEGORICAL,
    TASK_REGRESSION,
    EstimatorInfo,
    FittedEstimator,
    Matrix,
    Predictions,
    Target,
    get_info,
    resolve_params,
    REGISTRY,
)
from . import linear, neighbors, preprocess, tree  # noqa: F401  registers ids


def fit(estimator_id: str, params: dict, X: Matrix, y: Target | None = None,
        ) -> FittedEstimator:
    info = get_info(estimator_id)
    merged = resolve_params(info, params or {})
    if X.n_rows == 0:
        raise WorkbenchError(f"{estimator_id}: cannot fit on zero rows")
    needs_y = info.kind == MODEL or info.supervised
    if needs_y:
        if y is None:
            raise WorkbenchError(f"{estimator_id}: requires a target to fit")
        if len(y.values) != X.n_rows:
            raise WorkbenchError(
                f"{estimator_id}: target has {len(y.values)} rows,"
                f" features have {X.n_rows}"
            )
    return info.fit(info, merged, X, y) if needs_y else info.fit(info, merged, X)


def predict(fitted: FittedEstimator, X: Matrix) -> Predictions:
    info = get_info(fitted.estimator_id)
    if info.predict is None:
        raise WorkbenchError(f"{fitted.estimator_id} is not a model")
    fitted.check_schema(X, f"{fitted.estimator_id} predict")
    return info.predict(fitted, X)


def transform(fitted: FittedEstimator, X: Matrix) -> Matrix:
    info = get_info(fitted.estimator_id)
    if info.transform is None:
        raise WorkbenchError(f"{fitted.estimator_id} is not a transformer")
    fitted.check_schema(X, f"{fitted.estimator_id} transform")
    return info.transform(fitted, X)


def supports_task(estimator_id: str, task: str) -> bool:
    return task in get_info(estimator_id).tasks


__all__ = [
    "EstimatorInfo", "FittedEstimator", "Matrix", "Predictions", "Target",
    "REGISTRY", "get_info", "resolve_params", "fit", "predict", "transform",
    "supports_task",
    "KIND_CONTINUOUS", "KIND_CATEGORICAL",
    "TASK_REGRESSION", "TASK_BINARY", "TASK_CATEGORICAL",
    "MODEL", "STEP_KINDS", "SCOPES",
    "SCOPE_ALL", "SCOPE_CONTINUOUS", "SCOPE_CATEGORICAL",
]

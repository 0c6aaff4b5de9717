"""Shared estimator plumbing: feature matrices, targets, fitted state.

A Matrix is column-oriented so continuous and categorical features can
coexist: continuous columns are float64 with NaN for missing cells,
categorical columns are object arrays of strings with None for missing.
Estimators record the (name, kind) schema they were fit on and refuse
mismatched inputs later.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..errors import SchemaMismatchError, WorkbenchError

KIND_CONTINUOUS = "continuous"
KIND_CATEGORICAL = "categorical"

TASK_REGRESSION = "regression"
TASK_BINARY = "binary"
TASK_CATEGORICAL = "categorical"


@dataclass(frozen=True, eq=False)
class Matrix:
    """Column store of named, typed feature columns of equal length."""

    names: tuple[str, ...]
    kinds: tuple[str, ...]
    cols: tuple[np.ndarray, ...]

    def __post_init__(self):
        if not (len(self.names) == len(self.kinds) == len(self.cols)):
            raise WorkbenchError("matrix names, kinds and columns must align")
        if len(set(self.names)) != len(self.names):
            raise WorkbenchError("matrix column names must be unique")
        lengths = {len(c) for c in self.cols}
        if len(lengths) > 1:
            raise WorkbenchError("matrix columns must share one length")
        for k in self.kinds:
            if k not in (KIND_CONTINUOUS, KIND_CATEGORICAL):
                raise WorkbenchError(f"unknown column kind {k!r}")
        for c in self.cols:
            c.flags.writeable = False

    @property
    def n_rows(self) -> int:
        return len(self.cols[0]) if self.cols else 0

    @property
    def n_cols(self) -> int:
        return len(self.cols)

    def schema(self) -> tuple[tuple[str, str], ...]:
        return tuple(zip(self.names, self.kinds))

    def column(self, name: str) -> np.ndarray:
        return self.cols[self.names.index(name)]

    def take_rows(self, positions) -> "Matrix":
        pos = np.asarray(positions, dtype=int)
        return Matrix(self.names, self.kinds, tuple(c[pos] for c in self.cols))

    def select(self, indices) -> "Matrix":
        idx = list(indices)
        return Matrix(
            tuple(self.names[i] for i in idx),
            tuple(self.kinds[i] for i in idx),
            tuple(self.cols[i] for i in idx),
        )

    def with_column(self, index: int, values: np.ndarray) -> "Matrix":
        cols = list(self.cols)
        cols[index] = values
        return Matrix(self.names, self.kinds, tuple(cols))

    def to_numeric(self, context: str) -> np.ndarray:
        """Dense float view for numeric estimators.

        Raises naming the first offending column when a categorical column
        or a missing cell would silently corrupt the computation.
        """
        for name, kind in zip(self.names, self.kinds):
            if kind != KIND_CONTINUOUS:
                raise WorkbenchError(
                    f"{context}: column {name!r} is categorical; encode it first"
                )
        out = np.column_stack(self.cols) if self.cols else np.empty((self.n_rows, 0))
        bad = np.where(~np.isfinite(out).all(axis=0))[0]
        if bad.size:
            raise WorkbenchError(
                f"{context}: column {self.names[bad[0]]!r} has missing values; impute first"
            )
        return out.astype(np.float64, copy=False)


@dataclass(frozen=True, eq=False)
class Target:
    """Prediction target. Classification stores level indices plus levels."""

    task: str
    values: np.ndarray
    levels: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.task not in (TASK_REGRESSION, TASK_BINARY, TASK_CATEGORICAL):
            raise WorkbenchError(f"unknown task {self.task!r}")
        if self.task != TASK_REGRESSION and self.levels is None:
            raise WorkbenchError("classification targets need levels")
        self.values.flags.writeable = False

    @property
    def n_classes(self) -> int:
        return len(self.levels) if self.levels else 0


@dataclass(frozen=True, eq=False)
class Predictions:
    """Model outputs: point predictions plus class probabilities when classifying."""

    task: str
    values: np.ndarray
    proba: np.ndarray | None = None
    levels: tuple[str, ...] | None = None

    def __post_init__(self):
        self.values.flags.writeable = False
        if self.proba is not None:
            self.proba.flags.writeable = False


@dataclass(frozen=True, eq=False)
class FittedEstimator:
    estimator_id: str
    params: dict
    schema: tuple[tuple[str, str], ...]
    state: dict
    target_levels: tuple[str, ...] | None = None
    out_counts: tuple[int, ...] | None = None  # transformer outputs per input column

    def check_schema(self, X: Matrix, context: str) -> None:
        seen = X.schema()
        if seen == self.schema:
            return
        if len(seen) != len(self.schema):
            raise SchemaMismatchError(
                f"{context}: fit saw {len(self.schema)} columns, got {len(seen)}"
            )
        for (fn, fk), (sn, sk) in zip(self.schema, seen):
            if (fn, fk) != (sn, sk):
                raise SchemaMismatchError(
                    f"{context}: expected column {fn!r} ({fk}), got {sn!r} ({sk})"
                )


MODEL = "model"
IMPUTER = "imputer"
SCALER = "scaler"
ENCODER = "encoder"
SELECTOR = "selector"
STEP_KINDS = (IMPUTER, ENCODER, SCALER, SELECTOR, MODEL)

SCOPE_ALL = "all-input"
SCOPE_CONTINUOUS = "continuous-only"
SCOPE_CATEGORICAL = "categorical-only"
SCOPES = (SCOPE_ALL, SCOPE_CONTINUOUS, SCOPE_CATEGORICAL)


@dataclass(frozen=True)
class EstimatorInfo:
    """Registry entry describing one estimator id."""

    estimator_id: str
    kind: str
    tasks: tuple[str, ...]
    defaults: dict
    preset: dict  # name -> ParamDist, the stock search space
    default_scope: str
    supervised: bool = False
    seeded: bool = False
    fit: Callable[..., FittedEstimator] = None
    predict: Callable[..., Predictions] | None = None
    transform: Callable[..., Matrix] | None = None

    @property
    def param_names(self) -> frozenset[str]:
        names = set(self.defaults) | set(self.preset)
        if self.seeded:
            names.add("seed")
        return frozenset(names)


REGISTRY: dict[str, EstimatorInfo] = {}


def register(info: EstimatorInfo) -> EstimatorInfo:
    if info.estimator_id in REGISTRY:
        raise WorkbenchError(f"duplicate estimator id {info.estimator_id!r}")
    REGISTRY[info.estimator_id] = info
    return info


def get_info(estimator_id: str) -> EstimatorInfo:
    try:
        return REGISTRY[estimator_id]
    except KeyError:
        known = ", ".join(sorted(REGISTRY))
        raise WorkbenchError(
            f"unknown estimator {estimator_id!r} (known: {known})"
        ) from None


def resolve_params(info: EstimatorInfo, params: dict) -> dict:
    """Merge user params over defaults, rejecting unknown names."""
    for name in params:
        if name not in info.param_names:
            raise WorkbenchError(
                f"{info.estimator_id}: unknown parameter {name!r}"
                f" (accepts: {', '.join(sorted(info.param_names))})"
            )
    merged = dict(info.defaults)
    if info.seeded:
        merged.setdefault("seed", 0)
    merged.update(params)
    return merged

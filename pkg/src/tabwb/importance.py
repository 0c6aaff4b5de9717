"""Model interpretation: coefficients, permutation importance, permuted-target
significance, and Shapley values.

Permutation importance reports the drop in score when one feature column is
shuffled on held-out rows, no refitting. Permuted-target significance reruns
the whole protocol with shuffled targets to build a null distribution and
reports plus-one p-values. Shapley values use the interventional value
function: features absent from a coalition are replaced by background rows,
exactly for small feature counts and by weighted least squares on sampled
coalitions otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .canon import content_digest, derive_seed
from .dataset import Dataset
from .errors import UnsupportedMethodError, WorkbenchError
from .estimators import FittedEstimator, Matrix, Target, predict as predict_estimator
from .evaluate import (
    FittedPipeline,
    build_target,
    fit_pipeline,
    make_folds,
    transform_features,
    build_features,
    _resolve_scheme,
)
from .metrics import Metric, get_metric, prediction_input, score
from .parallel import parallel_map
from .pipeline import PipelineSpec, bind, fixed_config, validate


@dataclass
class ImportanceReport:
    method: str
    feature_names: tuple[str, ...]
    values: np.ndarray  # 1-D per feature, or (classes, features)
    p_values: np.ndarray | None = None
    base_value: float | None = None
    class_levels: tuple[str, ...] | None = None
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.values.shape[-1] != len(self.feature_names):
            raise WorkbenchError("importance values do not align with features")
        if self.p_values is not None:
            if np.any(self.p_values <= 0) or np.any(self.p_values > 1):
                raise WorkbenchError("p-values must lie in (0, 1]")

    def to_doc(self) -> dict:
        doc = {
            "method": self.method,
            "features": list(self.feature_names),
            "values": self.values.tolist(),
            "details": self.details,
        }
        if self.p_values is not None:
            doc["p_values"] = self.p_values.tolist()
        if self.base_value is not None:
            doc["base_value"] = self.base_value
        if self.class_levels is not None:
            doc["class_levels"] = list(self.class_levels)
        return doc

    def digest(self) -> str:
        return content_digest(self.to_doc())


def coef_importance(fitted: FittedEstimator) -> ImportanceReport:
    """Raw weight vector of a linear model; anything else is unsupported."""
    names = tuple(name for name, _ in fitted.schema)
    if fitted.estimator_id == "ridge":
        return ImportanceReport(
            "coef", names, np.array(fitted.state["w"]),
            details={"intercept": fitted.state["b"]},
        )
    if fitted.estimator_id == "logistic":
        ws = np.array(fitted.state["ws"])
        if fitted.state["binary"]:
            return ImportanceReport(
                "coef", names, ws[0],
                details={"intercept": float(fitted.state["bs"][0])},
            )
        return ImportanceReport(
            "coef", names, ws, class_levels=fitted.target_levels,
            details={"intercepts": fitted.state["bs"].tolist()},
        )
    raise UnsupportedMethodError(
        f"{fitted.estimator_id} has no coefficients; use permutation or shapley"
    )


def _signed_drop(metric: Metric, baseline: float, shuffled: float) -> float:
    if metric.direction == "higher-better":
        return baseline - shuffled
    return shuffled - baseline


def permutation_importance(model: FittedEstimator, X: Matrix, y: Target,
                           metric_id: str, n_repeats: int, seed: int,
                           ) -> ImportanceReport:
    """Mean score drop over shuffles of each column on fixed held-out rows."""
    if n_repeats < 1:
        raise WorkbenchError("n_repeats must be >= 1")
    if X.n_rows < 2:
        raise WorkbenchError("permutation importance needs at least two rows")
    metric = get_metric(metric_id)
    baseline = score(metric_id, y.values,
                     prediction_input(metric, predict_estimator(model, X)))
    values = np.zeros(X.n_cols)
    for j in range(X.n_cols):
        drops = []
        for r in range(n_repeats):
            rng = np.random.default_rng(derive_seed(seed, "perm", j, r))
            perm = rng.permutation(X.n_rows)
            shuffled = X.with_column(j, X.cols[j][perm])
            s = score(metric_id, y.values,
                      prediction_input(metric, predict_estimator(model, shuffled)))
            drops.append(_signed_drop(metric, baseline, s))
        values[j] = float(np.mean(drops))
    return ImportanceReport(
        "permutation", X.names, values,
        details={"metric": metric_id, "baseline": baseline,
                 "n_repeats": n_repeats, "seed": seed},
    )


def _protocol_importance(ds: Dataset, spec: PipelineSpec, train_rows,
                         scheme, metric_id: str, n_repeats: int,
                         seed: int) -> dict[str, float]:
    """Mean permutation importance over CV folds, keyed by feature name.

    Features enter the model after the pipeline's transforms, so names are
    post-transform; a feature absent from some fold simply contributes to
    fewer folds.
    """
    config = fixed_config(spec)
    bound = bind(spec, config)
    folds = make_folds(ds, train_rows, _resolve_scheme(scheme, derive_seed(seed, "outer")))
    sums: dict[str, float] = {}
    counts: dict[str, int] = {}
    for i, (tr, val) in enumerate(folds):
        fp = fit_pipeline(bound, ds, tr, seed, str(i))
        X_val = transform_features(fp, build_features(ds, val))
        y_val = build_target(ds, val)
        rep = permutation_importance(fp.model, X_val, y_val, metric_id,
                                     n_repeats, derive_seed(seed, "pi", i))
        for name, v in zip(rep.feature_names, rep.values):
            sums[name] = sums.get(name, 0.0) + float(v)
            counts[name] = counts.get(name, 0) + 1
    return {name: sums[name] / counts[name] for name in sums}


def _permute_target(ds: Dataset, rows, rng: np.random.Generator) -> Dataset:
    from .dataset import ROLE_TARGET
    targets = ds.columns_with_role(ROLE_TARGET)
    if len(targets) != 1:
        raise WorkbenchError("permuted-target significance needs one target")
    col = targets[0]
    pos = ds.positions(rows)
    values = np.array(col.values)
    values[pos] = values[pos][rng.permutation(len(pos))]
    new_col = replace(col, values=values, missing=np.array(col.missing))
    columns = tuple(new_col if c.name == col.name else c for c in ds.columns)
    return replace(ds, columns=columns)


def permuted_target_significance(ds: Dataset, spec: PipelineSpec, train_rows,
                                 scheme, metric_id: str, n_permutations: int,
                                 seed: int, *, n_repeats: int = 1,
                                 jobs: int = 1) -> ImportanceReport:
    """Plus-one p-values for per-feature importance against a shuffled-target null.

    p = (1 + #{null >= observed}) / (n_permutations + 1), so p is never zero
    and is exact under the null.
    """
    if n_permutations < 1:
        raise WorkbenchError("n_permutations must be >= 1")
    validate(spec).raise_if_invalid()
    train_rows = tuple(train_rows)
    observed = _protocol_importance(ds, spec, train_rows, scheme, metric_id,
                                    n_repeats, seed)
    names = tuple(sorted(observed))

    def null_run(r: int) -> dict[str, float]:
        rng = np.random.default_rng(derive_seed(seed, "null", r))
        ds_null = _permute_target(ds, train_rows, rng)
        return _protocol_importance(ds_null, spec, train_rows, scheme,
                                    metric_id, n_repeats, seed)

    null_runs = parallel_map(null_run, list(range(n_permutations)), jobs=jobs)
    values = np.array([observed[n] for n in names])
    exceed = np.zeros(len(names))
    for run in null_runs:
        null_vals = np.array([run.get(n, 0.0) for n in names])
        exceed += (null_vals >= values).astype(float)
    p_values = (exceed + 1.0) / (n_permutations + 1.0)
    return ImportanceReport(
        "permuted-target", names, values, p_values=p_values,
        details={"metric": metric_id, "n_permutations": n_permutations,
                 "n_repeats": n_repeats, "seed": seed},
    )


MAX_EXACT_FEATURES = 12


def _coalition_values(model_fn, background: np.ndarray, x: np.ndarray,
                      masks: np.ndarray) -> np.ndarray:
    """Interventional value of each coalition: mean prediction over hybrids."""
    n_masks = masks.shape[0]
    b = background.shape[0]
    hybrids = np.where(masks[:, None, :], x[None, None, :],
                       background[None, :, :])
    flat = hybrids.reshape(n_masks * b, x.shape[0])
    out = np.asarray(model_fn(flat), dtype=float).reshape(n_masks, b)
    return out.mean(axis=1)


def _all_masks(m: int) -> np.ndarray:
    codes = np.arange(2 ** m, dtype=np.int64)
    return (codes[:, None] >> np.arange(m)) & 1 == 1


def shapley_exact(model_fn, background, x) -> ImportanceReport:
    """Exact Shapley values by full coalition enumeration."""
    x = np.asarray(x, dtype=float)
    background = np.atleast_2d(np.asarray(background, dtype=float))
    m = x.shape[0]
    if m > MAX_EXACT_FEATURES:
        raise WorkbenchError(
            f"exact shapley enumerates 2^{m} coalitions; use sampled mode"
        )
    masks = _all_masks(m)
    values = _coalition_values(model_fn, background, x, masks)
    # weight of adding feature j to coalition of size s
    weights = np.array([math.factorial(s) * math.factorial(m - s - 1)
                        / math.factorial(m) for s in range(m)])
    sizes = masks.sum(axis=1)
    phi = np.zeros(m)
    for code in range(2 ** m):
        s = int(sizes[code])
        for j in range(m):
            if not masks[code, j]:
                with_j = code | (1 << j)
                phi[j] += weights[s] * (values[with_j] - values[code])
    return ImportanceReport(
        "shapley", tuple(f"x{j}" for j in range(m)), phi,
        base_value=float(values[0]),
        details={"mode": "exact", "n_background": int(background.shape[0])},
    )


def _kernel_weight(m: int, s: int) -> float:
    return (m - 1) / (math.comb(m, s) * s * (m - s))


def shapley_sampled(model_fn, background, x, n_coalitions: int,
                    seed: int = 0) -> ImportanceReport:
    """KernelSHAP: weighted least squares over sampled coalitions.

    The empty and full coalitions are handled as equality constraints
    (base value and total), so local accuracy holds by construction. When
    the budget covers every non-trivial coalition the estimate coincides
    with the exact enumeration.
    """
    x = np.asarray(x, dtype=float)
    background = np.atleast_2d(np.asarray(background, dtype=float))
    m = x.shape[0]
    if n_coalitions < 1:
        raise WorkbenchError("n_coalitions must be >= 1")
    trivial = _coalition_values(model_fn, background, x,
                                np.array([[False] * m, [True] * m]))
    v0, v_full = float(trivial[0]), float(trivial[1])
    delta = v_full - v0
    if m == 1:
        return ImportanceReport(
            "shapley", ("x0",), np.array([delta]), base_value=v0,
            details={"mode": "sampled", "n_coalitions": 0,
                     "n_background": int(background.shape[0])},
        )

    n_nontrivial = 2 ** m - 2 if m <= 30 else None
    if n_nontrivial is not None and n_coalitions >= n_nontrivial:
        masks = _all_masks(m)[1:-1]
    else:
        rng = np.random.default_rng(seed)
        chosen: dict[bytes, np.ndarray] = {}
        while len(chosen) < n_coalitions:
            mask = rng.integers(0, 2, size=m).astype(bool)
            if not mask.any() or mask.all():
                continue
            chosen.setdefault(mask.tobytes(), mask)
        masks = np.array(list(chosen.values()))

    values = _coalition_values(model_fn, background, x, masks)
    sizes = masks.sum(axis=1)
    w = np.array([_kernel_weight(m, int(s)) for s in sizes])
    z = masks.astype(float)
    # eliminate the last feature through the local-accuracy constraint
    A = z[:, :-1] - z[:, -1:]
    t = values - v0 - z[:, -1] * delta
    sw = np.sqrt(w)
    phi_head, *_ = np.linalg.lstsq(A * sw[:, None], t * sw, rcond=None)
    phi = np.append(phi_head, delta - phi_head.sum())
    return ImportanceReport(
        "shapley", tuple(f"x{j}" for j in range(m)), phi, base_value=v0,
        details={"mode": "sampled", "n_coalitions": int(masks.shape[0]),
                 "n_background": int(background.shape[0]), "seed": seed},
    )


def shapley_explain(model_fn, background, x, *, mode: str = "exact",
                    n_coalitions: int | None = None, seed: int = 0,
                    feature_names=None) -> ImportanceReport:
    """Shapley attribution of one prediction against a background sample."""
    background = np.atleast_2d(np.asarray(background, dtype=float))
    if background.shape[0] == 0:
        raise WorkbenchError("background must contain at least one row")
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != background.shape[1]:
        raise WorkbenchError("x must be one row with background's width")
    if mode == "exact":
        report = shapley_exact(model_fn, background, x)
    elif mode == "sampled":
        if n_coalitions is None:
            raise WorkbenchError("sampled mode needs n_coalitions")
        report = shapley_sampled(model_fn, background, x, n_coalitions, seed)
    else:
        raise WorkbenchError(f"unknown shapley mode {mode!r}")
    if feature_names is not None:
        names = tuple(feature_names)
        if len(names) != x.shape[0]:
            raise WorkbenchError("feature_names length mismatch")
        report.feature_names = names
    return report


def pipeline_model_fn(fp: FittedPipeline):
    """Adapt a fitted pipeline's model to a plain row-matrix callable.

    Regression returns predicted values; classification returns the
    positive-class (last level) probability. The matrix must already be in
    the model's post-transform feature space.
    """
    schema = fp.model.schema
    kinds = tuple(k for _, k in schema)
    if any(k != "continuous" for k in kinds):
        raise WorkbenchError(
            "shapley needs an all-continuous model input; encode categoricals"
        )
    names = tuple(n for n, _ in schema)

    def model_fn(rows: np.ndarray) -> np.ndarray:
        rows = np.atleast_2d(np.asarray(rows, dtype=float))
        X = Matrix(names, kinds, tuple(rows[:, j] for j in range(rows.shape[1])))
        preds = predict_estimator(fp.model, X)
        if preds.proba is not None:
            return preds.proba[:, -1]
        return np.asarray(preds.values, dtype=float)

    return model_fn

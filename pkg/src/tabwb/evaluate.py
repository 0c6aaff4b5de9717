"""Evaluation protocols: flat CV, nested CV with search, and holdout.

Every protocol runs the whole pipeline (transformers included) inside each
fold, fitting on that fold's training rows only. An AccessLedger can be
attached to any protocol; it records which rows every fit and predict call
touched, under a phase label, so leakage-freedom is checkable after the
fact instead of taken on faith.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .canon import content_digest, derive_seed
from .dataset import (
    DTYPE_CONTINUOUS,
    ROLE_INPUT,
    ROLE_NON_INPUT,
    ROLE_TARGET,
    Dataset,
    SplitIndices,
)
from .errors import MetricUndefinedError, WorkbenchError
from .estimators import (
    KIND_CATEGORICAL,
    KIND_CONTINUOUS,
    SCOPE_ALL,
    SCOPE_CONTINUOUS,
    TASK_BINARY,
    TASK_CATEGORICAL,
    TASK_REGRESSION,
    FittedEstimator,
    Matrix,
    Predictions,
    Target,
    fit as fit_estimator,
    get_info,
    predict as predict_estimator,
    transform as transform_estimator,
)
from .folds import CVScheme, make_folds
from .metrics import get_metric, prediction_input, score
from .parallel import parallel_map
from .pipeline import (
    BoundPipeline,
    ParamConfig,
    PipelineSpec,
    bind,
    fixed_config,
    spec_to_doc,
    validate,
)

FIT = "fit"
PREDICT = "predict"


@dataclass(frozen=True)
class LedgerEvent:
    phase: str
    op: str
    rows: frozenset[str]


class AccessLedger:
    """Append-only record of row access during an evaluation."""

    def __init__(self):
        self.events: list[LedgerEvent] = []

    def record(self, phase: str, op: str, rows) -> None:
        self.events.append(LedgerEvent(phase, op, frozenset(rows)))

    def extend(self, events) -> None:
        self.events.extend(events)

    def phases(self) -> list[str]:
        seen = []
        for e in self.events:
            if e.phase not in seen:
                seen.append(e.phase)
        return seen

    def rows_touched(self, op: str | None = None, phase_prefix: str = "") -> set:
        out: set = set()
        for e in self.events:
            if op is not None and e.op != op:
                continue
            if not e.phase.startswith(phase_prefix):
                continue
            out |= e.rows
        return out

    def fit_rows(self, phase_prefix: str = "") -> set:
        return self.rows_touched(FIT, phase_prefix)

    def predict_rows(self, phase_prefix: str = "") -> set:
        return self.rows_touched(PREDICT, phase_prefix)


_TASK_BY_DTYPE = {
    DTYPE_CONTINUOUS: TASK_REGRESSION,
    "binary": TASK_BINARY,
    "categorical": TASK_CATEGORICAL,
}


def build_features(ds: Dataset, rows) -> Matrix:
    cols = ds.columns_with_role(ROLE_INPUT)
    if not cols:
        raise WorkbenchError("no input-feature columns; assign roles first")
    pos = ds.positions(rows)
    names, kinds, arrays = [], [], []
    for c in cols:
        names.append(c.name)
        if c.dtype == DTYPE_CONTINUOUS:
            kinds.append(KIND_CONTINUOUS)
            arrays.append(c.values[pos].astype(float))
        else:
            kinds.append(KIND_CATEGORICAL)
            arrays.append(c.values[pos])
    return Matrix(tuple(names), tuple(kinds), tuple(arrays))


def build_target(ds: Dataset, rows) -> Target:
    targets = ds.columns_with_role(ROLE_TARGET)
    if len(targets) != 1:
        raise WorkbenchError(
            f"exactly one target column is required, found {len(targets)}"
        )
    col = targets[0]
    pos = ds.positions(rows)
    n_missing = int(col.missing[pos].sum())
    if n_missing:
        raise WorkbenchError(
            f"target {col.name!r} is missing in {n_missing} of the requested rows"
        )
    if col.dtype == DTYPE_CONTINUOUS:
        return Target(TASK_REGRESSION, col.values[pos].astype(float))
    index = {level: i for i, level in enumerate(col.levels)}
    values = np.array([index[v] for v in col.values[pos]], dtype=np.int64)
    task = TASK_BINARY if len(col.levels) == 2 else TASK_CATEGORICAL
    return Target(task, values, levels=col.levels)


def _scope_indices(X: Matrix, scope: str) -> list[int]:
    if scope == SCOPE_ALL:
        return list(range(X.n_cols))
    want = KIND_CONTINUOUS if scope == SCOPE_CONTINUOUS else KIND_CATEGORICAL
    return [i for i, k in enumerate(X.kinds) if k == want]


def _stitch(X: Matrix, scoped: list[int], transformed: Matrix,
            out_counts: tuple[int, ...]) -> Matrix:
    """Reassemble full matrix, replacing scoped columns with their outputs."""
    names, kinds, cols = [], [], []
    produced = iter(range(transformed.n_cols))
    cursor = 0
    by_scoped: dict[int, list[int]] = {}
    for local, count in enumerate(out_counts):
        by_scoped[scoped[local]] = [cursor + j for j in range(count)]
        cursor += count
    for i in range(X.n_cols):
        if i in by_scoped:
            for t in by_scoped[i]:
                names.append(transformed.names[t])
                kinds.append(transformed.kinds[t])
                cols.append(transformed.cols[t])
        else:
            names.append(X.names[i])
            kinds.append(X.kinds[i])
            cols.append(X.cols[i])
    return Matrix(tuple(names), tuple(kinds), tuple(cols))


@dataclass
class FittedPipeline:
    """All fitted steps of one pipeline, ready to transform and predict."""

    transformers: list[FittedEstimator | None]
    model: FittedEstimator
    bound: BoundPipeline
    feature_names: tuple[str, ...]  # names entering the model


def fit_pipeline(bound: BoundPipeline, ds: Dataset, train_rows, seed: int,
                 fold_tag: str, events: list | None = None,
                 phase: str = "fit") -> FittedPipeline:
    X = build_features(ds, train_rows)
    y = build_target(ds, train_rows)
    if events is not None:
        events.append(LedgerEvent(phase, FIT, frozenset(train_rows)))
    transformers: list[FittedEstimator | None] = []
    for step in bound.steps[:-1]:
        scoped = _scope_indices(X, step.scope)
        if not scoped:
            transformers.append(None)  # nothing in scope, step is a no-op
            continue
        sub = X.select(scoped)
        info = get_info(step.estimator_id)
        fitted = fit_estimator(step.estimator_id, step.params, sub,
                               y if info.supervised else None)
        X = _stitch(X, scoped, transform_estimator(fitted, sub), fitted.out_counts)
        transformers.append(fitted)
    model_step = bound.model
    params = dict(model_step.params)
    info = get_info(model_step.estimator_id)
    if info.seeded and "seed" not in params:
        params["seed"] = derive_seed(seed, "fit", fold_tag)
    model = fit_estimator(model_step.estimator_id, params, X, y)
    return FittedPipeline(transformers, model, bound, X.names)


def transform_features(fp: FittedPipeline, X: Matrix) -> Matrix:
    for step, fitted in zip(fp.bound.steps[:-1], fp.transformers):
        scoped = _scope_indices(X, step.scope)
        if fitted is None:
            if scoped:
                raise WorkbenchError(
                    f"{step.estimator_id}: fit saw no columns in scope,"
                    " transform input has some"
                )
            continue
        sub = X.select(scoped)
        X = _stitch(X, scoped, transform_estimator(fitted, sub), fitted.out_counts)
    return X


def predict_pipeline(fp: FittedPipeline, ds: Dataset, rows,
                     events: list | None = None,
                     phase: str = "predict") -> Predictions:
    X = transform_features(fp, build_features(ds, rows))
    if events is not None:
        events.append(LedgerEvent(phase, PREDICT, frozenset(rows)))
    return predict_estimator(fp.model, X)


@dataclass
class FoldResult:
    fold: str
    train_size: int
    val_size: int
    config: list | None
    scores: dict
    flags: dict = field(default_factory=dict)
    failed: bool = False
    error: str | None = None
    search: dict | None = None

    def to_doc(self) -> dict:
        doc = {
            "fold": self.fold,
            "train_size": self.train_size,
            "val_size": self.val_size,
            "config": self.config,
            "scores": self.scores,
        }
        if self.flags:
            doc["flags"] = self.flags
        if self.failed:
            doc["failed"] = True
            doc["error"] = self.error
        if self.search is not None:
            doc["search"] = self.search
        return doc


@dataclass
class EvalReport:
    kind: str
    problem_type: str
    metric_ids: tuple[str, ...]
    folds: list[FoldResult]
    aggregate: dict
    provenance: dict
    warnings: list[str] = field(default_factory=list)
    stratified: dict | None = None
    subset: dict | None = None

    def to_doc(self) -> dict:
        return {
            "kind": self.kind,
            "problem_type": self.problem_type,
            "metrics": list(self.metric_ids),
            "folds": [f.to_doc() for f in self.folds],
            "aggregate": self.aggregate,
            "provenance": self.provenance,
            "warnings": list(self.warnings),
            "stratified": self.stratified,
            "subset": self.subset,
        }

    def digest(self) -> str:
        return content_digest(self.to_doc())


def _check_metrics(metric_ids, problem_type):
    if not metric_ids:
        raise WorkbenchError("at least one metric is required")
    for m in metric_ids:
        metric = get_metric(m)
        if problem_type not in metric.tasks:
            raise WorkbenchError(
                f"metric {m!r} does not apply to {problem_type!r} problems"
            )


def _check_problem_type(ds: Dataset, problem_type: str):
    targets = ds.columns_with_role(ROLE_TARGET)
    if len(targets) != 1:
        raise WorkbenchError(
            f"exactly one target column is required, found {len(targets)}"
        )
    actual = _TASK_BY_DTYPE[targets[0].dtype]
    if actual != problem_type:
        raise WorkbenchError(
            f"pipeline declares {problem_type!r} but target {targets[0].name!r}"
            f" is {actual}"
        )


def _score_predictions(metric_ids, y: Target, preds: Predictions):
    scores, flags = {}, {}
    for m in metric_ids:
        metric = get_metric(m)
        try:
            scores[m] = score(m, y.values, prediction_input(metric, preds))
        except MetricUndefinedError as e:
            scores[m] = None
            flags[m] = str(e)
    return scores, flags


def _aggregate(metric_ids, folds):
    out = {}
    for m in metric_ids:
        vals = [f.scores[m] for f in folds
                if not f.failed and f.scores.get(m) is not None]
        if vals:
            arr = np.asarray(vals, dtype=float)
            out[m] = {"mean": float(arr.mean()), "std": float(arr.std()),
                      "n_folds": len(vals)}
        else:
            out[m] = {"mean": None, "std": None, "n_folds": 0}
    return out


def _resolve_scheme(scheme: CVScheme, fallback_seed: int) -> CVScheme:
    if scheme.seed is not None:
        return scheme
    return replace(scheme, seed=fallback_seed)


def stratify_scores(ds: Dataset, column: str, pooled_rows, y: Target,
                    preds: Predictions, metric_ids) -> dict:
    """Score pooled predictions overall and within levels of a grouping column."""
    col = ds.column(column)
    if col.dtype == DTYPE_CONTINUOUS:
        raise WorkbenchError(
            f"stratify column {column!r} must be binary or categorical"
        )
    pos = ds.positions(pooled_rows)
    labels = ["(missing)" if col.missing[p] else str(col.values[p]) for p in pos]
    labels = np.array(labels, dtype=object)
    groups = []
    for label in ["overall"] + sorted(set(labels.tolist())):
        mask = np.ones(len(labels), bool) if label == "overall" else labels == label
        y_sub = Target(y.task, y.values[mask], levels=y.levels)
        proba = preds.proba[mask] if preds.proba is not None else None
        p_sub = Predictions(preds.task, preds.values[mask], proba=proba,
                            levels=preds.levels)
        scores, flags = _score_predictions(metric_ids, y_sub, p_sub)
        groups.append({"group": label, "n": int(mask.sum()),
                       "scores": scores, "flags": flags})
    return {"column": column, "groups": groups}


def _pool_predictions(fold_outputs):
    """Merge per-fold validation predictions, ordered by row id."""
    by_row = {}
    for val_ids, y, preds in fold_outputs:
        for i, rid in enumerate(val_ids):
            proba = preds.proba[i] if preds.proba is not None else None
            by_row[rid] = (y.values[i], preds.values[i], proba)
    rows = sorted(by_row)
    y0 = fold_outputs[0][1]
    p0 = fold_outputs[0][2]
    y_vals = np.array([by_row[r][0] for r in rows])
    p_vals = np.array([by_row[r][1] for r in rows])
    proba = None
    if p0.proba is not None:
        proba = np.array([by_row[r][2] for r in rows])
    return rows, Target(y0.task, y_vals, levels=y0.levels), \
        Predictions(p0.task, p_vals, proba=proba, levels=p0.levels)


def _finish_report(report: EvalReport, ds, stratify_by, fold_outputs):
    failed = [f.fold for f in report.folds if f.failed]
    if failed:
        report.warnings.append(
            f"{len(failed)} fold(s) failed and were excluded: {', '.join(failed)}"
        )
    for f in report.folds:
        for m, msg in f.flags.items():
            report.warnings.append(f"fold {f.fold}: {m} undefined ({msg})")
    if stratify_by and fold_outputs:
        rows, y, preds = _pool_predictions(fold_outputs)
        report.stratified = stratify_scores(ds, stratify_by, rows, y,
                                            preds, report.metric_ids)
    return report


def evaluate(ds: Dataset, spec: PipelineSpec, train_rows, scheme: CVScheme,
             metric_ids, seed: int, *, ledger: AccessLedger | None = None,
             jobs: int = 1, stratify_by: str | None = None,
             progress=None) -> EvalReport:
    """Cross-validate a fully pinned pipeline spec."""
    validate(spec).raise_if_invalid()
    _check_problem_type(ds, spec.problem_type)
    metric_ids = tuple(metric_ids)
    _check_metrics(metric_ids, spec.problem_type)
    config = fixed_config(spec)
    bound = bind(spec, config)
    train_rows = tuple(train_rows)
    build_target(ds, train_rows)  # fail fast on missing targets
    folds = make_folds(ds, train_rows, _resolve_scheme(scheme, derive_seed(seed, "outer")))

    def run_fold(item):
        i, (tr, val) = item
        events: list[LedgerEvent] = []
        phase = f"fold{i}"
        try:
            fp = fit_pipeline(bound, ds, tr, seed, str(i), events, phase)
            preds = predict_pipeline(fp, ds, val, events, phase)
            y_val = build_target(ds, val)
            scores, flags = _score_predictions(metric_ids, y_val, preds)
            result = FoldResult(str(i), len(tr), len(val), config.to_doc(),
                                scores, flags)
            return result, events, (val, y_val, preds)
        except WorkbenchError as e:
            result = FoldResult(str(i), len(tr), len(val), config.to_doc(),
                                {m: None for m in metric_ids},
                                failed=True, error=str(e))
            return result, events, None

    outputs = []
    fold_results = []
    for result, events, out in parallel_map(run_fold, list(enumerate(folds)),
                                            jobs=jobs):
        fold_results.append(result)
        if ledger is not None:
            ledger.extend(events)
        if out is not None:
            outputs.append(out)
        if progress is not None:
            progress(len(fold_results), len(folds))

    report = EvalReport(
        kind="cv",
        problem_type=spec.problem_type,
        metric_ids=metric_ids,
        folds=fold_results,
        aggregate=_aggregate(metric_ids, fold_results),
        provenance={
            "spec": spec_to_doc(spec),
            "scheme": scheme.to_doc(),
            "seed": seed,
            "n_rows": len(train_rows),
            "objective_metric": None,
        },
    )
    return _finish_report(report, ds, stratify_by, outputs)


def nested_evaluate(ds: Dataset, spec: PipelineSpec, train_rows,
                    outer: CVScheme, inner: CVScheme, strategy,
                    metric_ids, objective_metric: str, seed: int, *,
                    budget: int | None = None,
                    ledger: AccessLedger | None = None, jobs: int = 1,
                    stratify_by: str | None = None,
                    progress=None) -> EvalReport:
    """Nested CV: hyperparameters are chosen inside each outer training fold.

    The inner loop never sees the outer validation rows; with a singleton
    search space this reduces exactly to evaluate().
    """
    from .search import best_of, optimize  # local: avoids a cycle

    validate(spec).raise_if_invalid()
    _check_problem_type(ds, spec.problem_type)
    metric_ids = tuple(metric_ids)
    _check_metrics(metric_ids, spec.problem_type)
    _check_metrics((objective_metric,), spec.problem_type)
    if objective_metric not in metric_ids:
        raise WorkbenchError(
            f"objective metric {objective_metric!r} must be one of the "
            f"reported metrics {list(metric_ids)}")
    objective_dir = get_metric(objective_metric).direction
    train_rows = tuple(train_rows)
    build_target(ds, train_rows)
    folds = make_folds(ds, train_rows, _resolve_scheme(outer, derive_seed(seed, "outer")))

    def run_fold(item):
        i, (tr, val) = item
        events: list[LedgerEvent] = []
        inner_scheme = _resolve_scheme(inner, derive_seed(seed, "inner", i))
        try:
            inner_folds = make_folds(ds, tr, inner_scheme)

            def objective(config: ParamConfig, cand: int) -> float:
                bound_c = bind(spec, config)
                vals = []
                for j, (itr, ival) in enumerate(inner_folds):
                    tag = f"search/{i}/{cand}/{j}"
                    fp = fit_pipeline(bound_c, ds, itr, seed, tag, events,
                                      f"outer{i}/search")
                    preds = predict_pipeline(fp, ds, ival, events,
                                             f"outer{i}/search")
                    y_val = build_target(ds, ival)
                    metric = get_metric(objective_metric)
                    vals.append(score(objective_metric, y_val.values,
                                      prediction_input(metric, preds)))
                return float(np.mean(vals))

            trace = optimize(spec, objective, strategy, objective_dir,
                             seed=derive_seed(seed, "search", i), budget=budget)
            best = best_of(trace)
            bound_best = bind(spec, best)
            fp = fit_pipeline(bound_best, ds, tr, seed, str(i), events,
                              f"outer{i}/refit")
            preds = predict_pipeline(fp, ds, val, events, f"outer{i}/refit")
            y_val = build_target(ds, val)
            scores, flags = _score_predictions(metric_ids, y_val, preds)
            result = FoldResult(str(i), len(tr), len(val), best.to_doc(),
                                scores, flags, search=trace.to_doc())
            return result, events, (val, y_val, preds)
        except WorkbenchError as e:
            result = FoldResult(str(i), len(tr), len(val), None,
                                {m: None for m in metric_ids},
                                failed=True, error=str(e))
            return result, events, None

    outputs = []
    fold_results = []
    for result, events, out in parallel_map(run_fold, list(enumerate(folds)),
                                            jobs=jobs):
        fold_results.append(result)
        if ledger is not None:
            ledger.extend(events)
        if out is not None:
            outputs.append(out)
        if progress is not None:
            progress(len(fold_results), len(folds))

    report = EvalReport(
        kind="nested-cv",
        problem_type=spec.problem_type,
        metric_ids=metric_ids,
        folds=fold_results,
        aggregate=_aggregate(metric_ids, fold_results),
        provenance={
            "spec": spec_to_doc(spec),
            "scheme": outer.to_doc(),
            "inner_scheme": inner.to_doc(),
            "seed": seed,
            "n_rows": len(train_rows),
            "objective_metric": objective_metric,
        },
    )
    return _finish_report(report, ds, stratify_by, outputs)


def winning_config(report: EvalReport) -> ParamConfig:
    """Config of the outer fold with the best validation objective.

    Ties keep the lowest fold index. For plain CV reports every fold shares
    one config, which is returned unchanged.
    """
    candidates = [f for f in report.folds if not f.failed and f.config]
    if not candidates:
        raise WorkbenchError("no successful folds to pick a config from")
    objective = report.provenance.get("objective_metric") or report.metric_ids[0]
    metric = get_metric(objective)
    best = None
    for f in candidates:
        value = f.scores.get(objective)
        if best is None or metric.better(value, best[0]):
            best = (value, f)
    from .pipeline import StepConfig
    return ParamConfig(tuple(
        StepConfig(d["estimator"], dict(d["params"])) for d in best[1].config
    ))


def final_test(ds: Dataset, spec: PipelineSpec, split: SplitIndices,
               metric_ids, seed: int, *, config: ParamConfig | None = None,
               ledger: AccessLedger | None = None) -> EvalReport:
    """Fit once on the global training side, score once on the held-out side."""
    validate(spec).raise_if_invalid()
    _check_problem_type(ds, spec.problem_type)
    metric_ids = tuple(metric_ids)
    _check_metrics(metric_ids, spec.problem_type)
    if config is None:
        config = fixed_config(spec)
    bound = bind(spec, config)
    events: list[LedgerEvent] = []
    fp = fit_pipeline(bound, ds, split.train_ids, seed, "holdout", events,
                      "holdout")
    preds = predict_pipeline(fp, ds, split.test_ids, events, "holdout")
    y_test = build_target(ds, split.test_ids)
    scores, flags = _score_predictions(metric_ids, y_test, preds)
    if ledger is not None:
        ledger.extend(events)
    result = FoldResult("holdout", len(split.train_ids), len(split.test_ids),
                        config.to_doc(), scores, flags)
    report = EvalReport(
        kind="holdout",
        problem_type=spec.problem_type,
        metric_ids=metric_ids,
        folds=[result],
        aggregate=_aggregate(metric_ids, [result]),
        provenance={
            "spec": spec_to_doc(spec),
            "scheme": None,
            "seed": seed,
            "n_rows": len(split.train_ids) + len(split.test_ids),
            "objective_metric": None,
        },
    )
    return _finish_report(report, ds, None, None)


def subset_run(ds: Dataset, column: str, level: str, op, /, **kwargs):
    """Run an evaluation protocol on the rows of one subgroup only.

    The filter column must be a binary or categorical non-input column.
    Row arguments (train_rows, split) are intersected with the subgroup.
    """
    col = ds.column(column)
    if col.role != ROLE_NON_INPUT:
        raise WorkbenchError(f"subset column {column!r} must have the non-input role")
    if col.dtype == DTYPE_CONTINUOUS:
        raise WorkbenchError(f"subset column {column!r} must be binary or categorical")
    keep = {rid for rid, v, m in zip(ds.row_ids, col.values, col.missing)
            if not m and str(v) == str(level)}
    if not keep:
        raise WorkbenchError(f"no rows where {column!r} == {level!r}")
    kwargs = dict(kwargs)
    if "train_rows" in kwargs:
        filtered = tuple(r for r in kwargs["train_rows"] if r in keep)
        if not filtered:
            raise WorkbenchError("subgroup does not intersect the training rows")
        kwargs["train_rows"] = filtered
    if "split" in kwargs:
        split: SplitIndices = kwargs["split"]
        train = tuple(r for r in split.train_ids if r in keep)
        test = tuple(r for r in split.test_ids if r in keep)
        if not train or not test:
            raise WorkbenchError("subgroup leaves an empty split side")
        kwargs["split"] = SplitIndices(train, test, split.seed,
                                       f"{split.strategy}|subset")
    report = op(ds, **kwargs)
    report.subset = {"column": column, "level": str(level),
                     "n_rows": len(keep)}
    return report

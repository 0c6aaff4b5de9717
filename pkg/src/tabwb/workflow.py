"""End-to-end run execution: config in, sealed run record out.

The same entry point backs the CLI and the HTTP API, so both produce
byte-identical records for identical configs and seeds. Replay re-executes
a stored record after checking the dataset fingerprint and reports whether
the fresh digest matches.
"""

from __future__ import annotations

import datetime
import time
from pathlib import Path

from .canon import content_digest, derive_seed
from .config import (
    inner_scheme,
    outer_scheme,
    pipeline_from_config,
    search_strategy,
    validate_config,
)
from .dataset import Dataset, SplitIndices, global_split, load_csv, set_role
from .errors import (
    ConfigError,
    UnsupportedMethodError,
    WorkbenchError,
)
from .evaluate import (
    AccessLedger,
    build_features,
    build_target,
    evaluate,
    final_test,
    fit_pipeline,
    nested_evaluate,
    subset_run,
    transform_features,
    winning_config,
)
from .importance import (
    coef_importance,
    permutation_importance,
    permuted_target_significance,
    pipeline_model_fn,
    shapley_explain,
)
from .pipeline import bind, fixed_config
from .runstore import (
    RunLog,
    check_fingerprint,
    dataset_fingerprint,
    load_record,
    new_record,
    seal_record,
    write_record,
)

import numpy as np


def load_configured_dataset(config: dict, dataset_path: str | None = None) -> tuple[Dataset, str]:
    ds_cfg = config["dataset"]
    path = dataset_path or ds_cfg.get("path")
    if not path:
        raise ConfigError([("dataset.path", "no dataset path available")])
    kwargs = {"dtype_overrides": ds_cfg.get("dtypes")}
    if ds_cfg.get("missing_tokens"):
        kwargs["missing_tokens"] = frozenset(ds_cfg["missing_tokens"])
    ds = load_csv(path, **kwargs)
    roles = config["roles"]
    ds = set_role(ds, roles["target"], "target")
    for name in roles.get("non_input", []):
        ds = set_role(ds, name, "non-input")
    return ds, str(path)


def _make_split(config: dict, ds: Dataset, seed: int) -> SplitIndices | None:
    split_cfg = config.get("split")
    if not split_cfg:
        return None
    split_seed = split_cfg.get("seed")
    if split_seed is None:
        split_seed = derive_seed(seed, "split")
    return global_split(
        ds,
        split_cfg["test_fraction"],
        stratify_by=split_cfg.get("stratify_by"),
        group_by=split_cfg.get("group_by"),
        seed=split_seed,
    )


def _importance_rows(config, split, train_rows):
    imp = config["importance"]
    if imp["rows"] == "test":
        if split is None:
            raise WorkbenchError("importance rows='test' requires a split")
        return split.test_ids
    return tuple(train_rows)


def _default_metric(config) -> str:
    imp = config.get("importance") or {}
    return imp.get("metric") or config.get("objective_metric") or config["metrics"][0]


def _run_importance(config, ds, spec, chosen, train_rows, split, seed,
                    log, warnings) -> dict:
    imp_cfg = config["importance"]
    rows = _importance_rows(config, split, train_rows)
    reports: dict[str, dict] = {}
    metric_id = _default_metric(config)
    n_repeats = imp_cfg.get("n_repeats", 5)

    bound = bind(spec, chosen)
    fp = fit_pipeline(bound, ds, tuple(train_rows), seed, "importance")
    X_rows = transform_features(fp, build_features(ds, rows))
    y_rows = build_target(ds, rows)

    for method in imp_cfg["methods"]:
        log.log("explain", f"computing {method} importance")
        try:
            if method == "coef":
                reports[method] = coef_importance(fp.model).to_doc()
            elif method == "permutation":
                rep = permutation_importance(
                    fp.model, X_rows, y_rows, metric_id, n_repeats,
                    derive_seed(seed, "importance", "perm"))
                reports[method] = rep.to_doc()
            elif method == "permuted-target":
                rep = permuted_target_significance(
                    ds, _pin_spec(spec, chosen), train_rows, outer_scheme(config),
                    metric_id, imp_cfg.get("n_permutations", 99),
                    derive_seed(seed, "importance", "null"),
                    n_repeats=1)
                reports[method] = rep.to_doc()
            elif method == "shapley":
                reports[method] = _shapley_summary(
                    imp_cfg.get("shapley") or {}, fp, ds, train_rows, rows,
                    derive_seed(seed, "importance", "shap"))
        except UnsupportedMethodError as e:
            warnings.append(f"importance {method} skipped: {e}")
    return reports


def _pin_spec(spec, config):
    """Collapse a searchable spec to the chosen config's fixed equivalent."""
    from .params import Fixed
    from .pipeline import PipelineSpec, StepSpec

    steps = []
    for step_cfg in config.steps:
        prior = next(s for s in _concrete_steps(spec)
                     if s.estimator == step_cfg.estimator_id)
        params = {k: Fixed(v) for k, v in step_cfg.params.items()}
        steps.append(StepSpec(prior.kind, prior.estimator, params,
                              prior.applies_to))
    return PipelineSpec(tuple(steps), spec.problem_type)


def _concrete_steps(spec):
    from .pipeline import flatten_alternatives
    out = []
    for step in spec.steps:
        out.extend(flatten_alternatives(step))
    return out


def _shapley_summary(shap_cfg, fp, ds, train_rows, rows, seed) -> dict:
    """Mean |phi| per feature over a handful of explained rows."""
    mode = shap_cfg.get("mode", "sampled")
    n_instances = shap_cfg.get("n_instances", 5)
    background_size = shap_cfg.get("background_size", 25)
    n_coalitions = shap_cfg.get("n_coalitions", 128)

    model_fn = pipeline_model_fn(fp)
    X_train = transform_features(fp, build_features(ds, tuple(train_rows)))
    bg = np.column_stack(X_train.cols)
    if bg.shape[0] > background_size:
        rng = np.random.default_rng(derive_seed(seed, "background"))
        bg = bg[rng.choice(bg.shape[0], size=background_size, replace=False)]
    X_rows = transform_features(fp, build_features(ds, rows))
    explained = np.column_stack(X_rows.cols)[:n_instances]

    names = X_rows.names
    total = np.zeros(len(names))
    per_row = []
    for i in range(explained.shape[0]):
        rep = shapley_explain(
            model_fn, bg, explained[i], mode=mode,
            n_coalitions=n_coalitions if mode == "sampled" else None,
            seed=derive_seed(seed, "row", i), feature_names=names)
        total += np.abs(rep.values)
        per_row.append({"row": i, "values": rep.values.tolist(),
                        "base_value": rep.base_value})
    return {
        "method": "shapley",
        "features": list(names),
        "values": (total / max(1, explained.shape[0])).tolist(),
        "details": {"mode": mode, "n_instances": int(explained.shape[0]),
                    "n_background": int(bg.shape[0]),
                    "per_row": per_row},
    }


def execute_run(config: dict, out_root, *, dataset_path: str | None = None,
                seed_override: int | None = None, jobs: int = 1,
                progress=None, write: bool = True) -> dict:
    """Validate, execute, and seal one run. Returns the record."""
    validate_config(config)
    seed = seed_override if seed_override is not None else config.get("seed", 0)

    log = RunLog()
    started = time.time()
    log.log("load", "loading dataset")
    ds, path_used = load_configured_dataset(config, dataset_path)
    record = new_record(config, seed, path_used, dataset_fingerprint(ds))
    warnings: list[str] = []

    def report_progress(phase):
        if progress is None:
            return None
        def cb(done, total):
            progress(phase, done, total)
        return cb

    try:
        split = _make_split(config, ds, seed)
        if split is not None:
            log.log("split", f"holdout split: {len(split.train_ids)} train,"
                             f" {len(split.test_ids)} test")
            record["split"] = split.to_doc()
        train_rows = split.train_ids if split else ds.row_ids

        spec = pipeline_from_config(config)
        metrics = config["metrics"]
        strategy = search_strategy(config)
        subset = config.get("subset")
        stratify_by = config.get("stratify_report_by")
        ledger = AccessLedger()

        if strategy is not None:
            log.log("search", "nested cross-validation with search")
            kwargs = dict(
                train_rows=train_rows, outer=outer_scheme(config),
                inner=inner_scheme(config), strategy=strategy,
                metric_ids=metrics,
                objective_metric=config["objective_metric"], seed=seed,
                ledger=ledger, jobs=jobs, stratify_by=stratify_by,
                progress=report_progress("cv"),
            )
            if subset:
                cv_report = subset_run(ds, subset["column"], subset["level"],
                                       _nested_op(spec), **kwargs)
            else:
                cv_report = nested_evaluate(ds, spec, **kwargs)
            chosen = winning_config(cv_report)
        else:
            log.log("fit", "cross-validating pipeline")
            kwargs = dict(
                train_rows=train_rows, scheme=outer_scheme(config),
                metric_ids=metrics, seed=seed, ledger=ledger, jobs=jobs,
                stratify_by=stratify_by, progress=report_progress("cv"),
            )
            if subset:
                cv_report = subset_run(ds, subset["column"], subset["level"],
                                       _evaluate_op(spec), **kwargs)
            else:
                cv_report = evaluate(ds, spec, **kwargs)
            chosen = fixed_config(spec)

        log.log("score", "aggregating fold scores")
        record["reports"]["cv"] = cv_report.to_doc()
        record["artifact_digests"]["cv"] = cv_report.digest()
        warnings.extend(cv_report.warnings)

        if split is not None:
            log.log("score", "scoring the held-out test rows")
            kwargs = dict(metric_ids=metrics, seed=seed, config=chosen,
                          ledger=ledger, split=split)
            if subset:
                holdout = subset_run(ds, subset["column"], subset["level"],
                                     _holdout_op(spec), **kwargs)
            else:
                holdout = final_test(ds, spec, **kwargs)
            record["reports"]["holdout"] = holdout.to_doc()
            record["artifact_digests"]["holdout"] = holdout.digest()
            warnings.extend(holdout.warnings)

        if config.get("importance"):
            imp_train = train_rows
            if subset:
                col = ds.column(subset["column"])
                keep = {rid for rid, v, miss in zip(ds.row_ids, col.values,
                                                    col.missing)
                        if not miss and str(v) == str(subset["level"])}
                imp_train = tuple(r for r in train_rows if r in keep)
            imp_reports = _run_importance(config, ds, spec, chosen, imp_train,
                                          split, seed, log, warnings)
            record["reports"]["importance"] = imp_reports
            for method, doc in imp_reports.items():
                record["artifact_digests"][f"importance.{method}"] = content_digest(doc)

        failed_folds = [f for f in cv_report.folds if f.failed]
        if failed_folds and len(failed_folds) < len(cv_report.folds):
            record["status"] = "partial"
        elif failed_folds:
            record["status"] = "failed"
            record["error"] = failed_folds[0].error
    except WorkbenchError as e:
        record["status"] = "failed"
        record["error"] = str(e)

    record["warnings"] = warnings
    record["log"] = log.events
    record["created_at"] = datetime.datetime.now(datetime.timezone.utc) \
        .isoformat(timespec="seconds")
    record["duration_s"] = round(time.time() - started, 3)
    seal_record(record)
    if write:
        write_record(record, out_root)
    return record


def _evaluate_op(spec):
    def op(ds, **kwargs):
        return evaluate(ds, spec, **kwargs)
    return op


def _nested_op(spec):
    def op(ds, **kwargs):
        return nested_evaluate(ds, spec, **kwargs)
    return op


def _holdout_op(spec):
    def op(ds, **kwargs):
        return final_test(ds, spec, **kwargs)
    return op


def replay_run(record_path, out_root=None, *, jobs: int = 1,
               dataset_path: str | None = None) -> tuple[dict, dict, bool]:
    """Re-execute a stored record; returns (old, new, digests_match).

    The dataset is re-loaded and its fingerprint must match the recorded
    one before any work happens.
    """
    old = load_record(record_path)
    config = old["config"]
    validate_config(config)
    path = dataset_path or old["dataset"]["path"]
    ds, _ = load_configured_dataset(config, path)
    check_fingerprint(old["dataset"]["fingerprint"], ds)
    new = execute_run(
        config,
        out_root or Path(record_path).resolve().parent.parent,
        dataset_path=path,
        seed_override=old["seed"],
        jobs=jobs,
        write=out_root is not None,
    )
    return old, new, new["digest"] == old["digest"]

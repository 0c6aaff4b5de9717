"""The protocol engine: leakage accounting, nesting, holdout, subgroups."""

import numpy as np
import pytest

from tabwb.canon import derive_seed
from tabwb.dataset import global_split
from tabwb.errors import WorkbenchError
from tabwb.evaluate import (
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
from tabwb.evaluate import EvalReport, FoldResult
from tabwb.folds import CVScheme, make_folds
from tabwb.params import Choice, Fixed
from tabwb.pipeline import PipelineSpec, StepSpec, bind, fixed_config
from tabwb.search import SearchStrategy

from conftest import blobs_rows, linear_rows


def pinned_ridge(alpha=1.0, pre=()):
    steps = tuple(pre) + (StepSpec("model", "ridge", {"alpha": Fixed(alpha)}),)
    return PipelineSpec(steps=steps, problem_type="regression")


SCALED_RIDGE = pinned_ridge(pre=(StepSpec("scaler", "scaler_standard", {}),))


# ---------------------------------------------------------------------------
# feature / target assembly


def test_build_features_uses_input_roles_only(make_dataset):
    ds = make_dataset(
        ["x", "g", "y"],
        [[1.0, "a", 2.0], [2.0, "b", 4.0], [3.0, "c", 6.0]],
        target="y", non_input=["g"],
    )
    X = build_features(ds, ds.row_ids)
    assert X.names == ("x",)


def test_build_target_levels_come_from_whole_dataset(make_dataset):
    ds = make_dataset(
        ["x", "cls"],
        [[1, "a"], [2, "b"], [3, "c"], [4, "a"]],
        target="cls",
    )
    y = build_target(ds, [0, 3])  # only "a" rows requested
    assert y.levels == ("a", "b", "c")
    assert y.values.tolist() == [0, 0]


def test_build_target_rejects_missing(make_dataset):
    ds = make_dataset(["x", "y"], [[1, 1.0], [2, ""], [3, 3.0]], target="y")
    with pytest.raises(WorkbenchError, match="missing"):
        build_target(ds, ds.row_ids)


# ---------------------------------------------------------------------------
# pipeline fitting: train-only statistics


def test_transformer_statistics_come_from_training_rows(make_dataset):
    ds = make_dataset(
        ["x", "y"],
        [[0.0, 0.0], [10.0, 1.0], [100.0, 2.0], [5.0, 3.0]],
        target="y",
    )
    bound = bind(SCALED_RIDGE, fixed_config(SCALED_RIDGE))
    fp = fit_pipeline(bound, ds, [0, 1], seed=0, fold_tag="t")
    # train rows 0,1: mean 5, population std 5; row 2 scales with those stats
    X_val = build_features(ds, [2])
    out = transform_features(fp, X_val)
    assert out.column("x")[0] == pytest.approx((100.0 - 5.0) / 5.0)


def test_pipeline_handles_mixed_columns(make_dataset):
    ds = make_dataset(
        ["num", "color", "y"],
        [
            [1.0, "r", 1.0], [2.0, "g", 2.0], [3.0, "b", 3.0],
            [4.0, "r", 4.0], [5.0, "g", 5.0], [6.0, "b", 6.0],
        ],
        target="y",
    )
    spec = PipelineSpec(
        steps=(
            StepSpec("encoder", "onehot", {}),
            StepSpec("scaler", "scaler_standard", {}),
            StepSpec("model", "ridge", {"alpha": Fixed(0.1)}),
        ),
        problem_type="regression",
    )
    report = evaluate(ds, spec, ds.row_ids, CVScheme(k=2, seed=0), ["mae"], seed=1)
    assert not any(f.failed for f in report.folds)


def test_empty_scope_step_is_skipped(make_dataset):
    # onehot with no categorical columns in sight must be a no-op
    header, rows = linear_rows(12, seed=1)
    ds = make_dataset(header, rows, target="y")
    spec = pinned_ridge(pre=(StepSpec("encoder", "onehot", {}),))
    report = evaluate(ds, spec, ds.row_ids, CVScheme(k=3, seed=0), ["r2"], seed=0)
    assert not any(f.failed for f in report.folds)


# ---------------------------------------------------------------------------
# evaluate: the leakage ledger


def test_fold_fit_rows_stay_inside_training_side(make_dataset):
    header, rows = linear_rows(30, seed=7)
    ds = make_dataset(header, rows, target="y")
    scheme = CVScheme(k=5, seed=None)
    seed = 13
    ledger = AccessLedger()
    evaluate(ds, SCALED_RIDGE, ds.row_ids, scheme, ["r2"], seed, ledger=ledger)

    from tabwb.evaluate import _resolve_scheme

    folds = make_folds(ds, ds.row_ids, _resolve_scheme(scheme, derive_seed(seed, "outer")))
    for i, (train, val) in enumerate(folds):
        fit_rows = ledger.fit_rows(f"fold{i}")
        assert fit_rows, "fold must record its fit"
        assert fit_rows <= set(train)
        assert not fit_rows & set(val)
        assert set(val) <= ledger.predict_rows(f"fold{i}")


def test_evaluate_scores_linear_data_sanely(make_dataset):
    header, rows = linear_rows(40, seed=3)
    ds = make_dataset(header, rows, target="y")
    report = evaluate(ds, SCALED_RIDGE, ds.row_ids,
                      CVScheme(k=4, seed=0), ["r2", "rmse"], seed=5)
    assert report.kind == "cv"
    assert len(report.folds) == 4
    assert report.aggregate["r2"]["mean"] > 0.95
    # aggregate is the mean/population-std over fold scores
    vals = [f.scores["r2"] for f in report.folds]
    assert report.aggregate["r2"]["mean"] == pytest.approx(np.mean(vals))
    assert report.aggregate["r2"]["std"] == pytest.approx(np.std(vals))
    assert report.aggregate["r2"]["n_folds"] == 4


def test_evaluate_deterministic_in_seed(make_dataset):
    header, rows = linear_rows(24, seed=9)
    ds = make_dataset(header, rows, target="y")
    scheme = CVScheme(k=3)
    a = evaluate(ds, SCALED_RIDGE, ds.row_ids, scheme, ["r2"], seed=1)
    b = evaluate(ds, SCALED_RIDGE, ds.row_ids, scheme, ["r2"], seed=1)
    c = evaluate(ds, SCALED_RIDGE, ds.row_ids, scheme, ["r2"], seed=2)
    assert a.digest() == b.digest()
    assert a.digest() != c.digest()


def test_evaluate_jobs_do_not_change_results(make_dataset):
    header, rows = linear_rows(24, seed=2)
    ds = make_dataset(header, rows, target="y")
    a = evaluate(ds, SCALED_RIDGE, ds.row_ids, CVScheme(k=4), ["r2"], seed=3, jobs=1)
    b = evaluate(ds, SCALED_RIDGE, ds.row_ids, CVScheme(k=4), ["r2"], seed=3, jobs=4)
    assert a.digest() == b.digest()


def test_one_nn_is_perfect_on_duplicated_points(make_dataset):
    # every point appears several times, so each validation row has an
    # identical twin on the training side and 1-NN recalls its label
    base = [(0.0, 0.0, "a"), (1.0, 0.0, "b"), (0.0, 1.0, "b"), (1.0, 1.0, "a")]
    rows = [list(p) for p in base for _ in range(6)]
    ds = make_dataset(
        ["x1", "x2", "cls"], rows, target="cls",
        dtype_overrides={"x1": "continuous", "x2": "continuous"},
    )
    spec = PipelineSpec(
        steps=(StepSpec("model", "knn", {"k": Fixed(1)}),),
        problem_type="binary",
    )
    report = evaluate(ds, spec, ds.row_ids, CVScheme(k=3, seed=0),
                      ["accuracy"], seed=0)
    assert report.aggregate["accuracy"]["mean"] == 1.0


def test_constant_predictor_r2_is_nonpositive(make_dataset):
    header, rows = linear_rows(30, seed=4)
    ds = make_dataset(header, rows, target="y")
    spec = PipelineSpec(
        steps=(StepSpec("model", "dtree", {"max_depth": Fixed(0)}),),
        problem_type="regression",
    )
    report = evaluate(ds, spec, ds.row_ids, CVScheme(k=3, seed=0), ["r2"], seed=0)
    assert report.aggregate["r2"]["mean"] <= 0.0


def test_undefined_metric_flags_fold_and_survives(make_dataset):
    # validating on the constant-target group makes r2 undefined there
    rows = [[float(i), 5.0, "flat"] for i in range(6)]
    rows += [[float(i), float(i), "vary"] for i in range(6, 14)]
    ds = make_dataset(["x", "y", "grp"], rows, target="y", non_input=["grp"])
    scheme = CVScheme(kind="leave-one-group-out", group_column="grp")
    report = evaluate(ds, pinned_ridge(), ds.row_ids, scheme,
                      ["r2", "mae"], seed=0)
    flat_fold = next(f for f in report.folds if f.scores["r2"] is None)
    assert not flat_fold.failed
    assert "r2" in flat_fold.flags
    assert flat_fold.scores["mae"] is not None
    assert report.aggregate["r2"]["n_folds"] == 1
    assert report.aggregate["mae"]["n_folds"] == 2
    assert any("undefined" in w for w in report.warnings)


def test_failed_fold_excluded_with_warning(make_dataset):
    # training on the single-class group makes logistic fail in that fold
    rows = [[float(i), "a" if i % 2 else "b", "mixed"] for i in range(10)]
    rows += [[float(i), "a", "pure"] for i in range(10, 16)]
    ds = make_dataset(["x", "cls", "grp"], rows, target="cls", non_input=["grp"])
    spec = PipelineSpec(
        steps=(StepSpec("model", "logistic", {"alpha": Fixed(1.0)}),),
        problem_type="binary",
    )
    scheme = CVScheme(kind="leave-one-group-out", group_column="grp")
    report = evaluate(ds, spec, ds.row_ids, scheme, ["accuracy"], seed=0)
    failed = [f for f in report.folds if f.failed]
    assert len(failed) == 1
    assert "single class" in failed[0].error
    assert report.aggregate["accuracy"]["n_folds"] == 1
    assert any("failed" in w for w in report.warnings)


def test_metric_task_mismatch_rejected(make_dataset):
    header, rows = linear_rows(12, seed=0)
    ds = make_dataset(header, rows, target="y")
    with pytest.raises(WorkbenchError, match="does not apply"):
        evaluate(ds, SCALED_RIDGE, ds.row_ids, CVScheme(k=2), ["accuracy"], seed=0)


def test_problem_type_must_match_target(make_dataset):
    header, rows = blobs_rows(12, seed=0)
    ds = make_dataset(header, rows, target="label")
    with pytest.raises(WorkbenchError, match="regression"):
        evaluate(ds, SCALED_RIDGE, ds.row_ids, CVScheme(k=2), ["r2"], seed=0)


# ---------------------------------------------------------------------------
# nested evaluation


def nested_args(budget=4):
    return dict(
        outer=CVScheme(k=3),
        inner=CVScheme(k=2),
        strategy=SearchStrategy(kind="random", budget=budget),
        metric_ids=["r2"],
        objective_metric="r2",
    )


def test_nested_singleton_equals_plain_cv(make_dataset):
    header, rows = linear_rows(30, seed=11)
    ds = make_dataset(header, rows, target="y")
    seed = 21
    plain = evaluate(ds, SCALED_RIDGE, ds.row_ids, CVScheme(k=3), ["r2", "mae"],
                     seed)
    nested = nested_evaluate(
        ds, SCALED_RIDGE, ds.row_ids,
        outer=CVScheme(k=3), inner=CVScheme(k=2),
        strategy=SearchStrategy(kind="random", budget=4),
        metric_ids=["r2", "mae"], objective_metric="r2", seed=seed,
    )
    assert len(plain.folds) == len(nested.folds)
    for p, n in zip(plain.folds, nested.folds):
        assert p.scores == n.scores
        assert p.train_size == n.train_size and p.val_size == n.val_size
        assert p.config == n.config
    assert plain.aggregate == nested.aggregate


def test_nested_search_never_touches_outer_validation(make_dataset):
    header, rows = linear_rows(36, seed=8)
    ds = make_dataset(header, rows, target="y")
    spec = pinned_ridge(alpha=None)
    spec = PipelineSpec(
        steps=(StepSpec("model", "ridge", {"alpha": Choice([0.01, 1.0, 100.0])}),),
        problem_type="regression",
    )
    seed = 4
    ledger = AccessLedger()
    nested_evaluate(ds, spec, ds.row_ids, seed=seed, ledger=ledger,
                    **nested_args(budget=3))

    from tabwb.evaluate import _resolve_scheme

    folds = make_folds(ds, ds.row_ids,
                       _resolve_scheme(CVScheme(k=3), derive_seed(seed, "outer")))
    for i, (train, val) in enumerate(folds):
        search_fits = ledger.fit_rows(f"outer{i}/search")
        refit = ledger.fit_rows(f"outer{i}/refit")
        assert search_fits and refit
        assert search_fits <= set(train)
        assert not search_fits & set(val)
        assert refit == set(train)
        # inner validation happens inside the outer training side too
        assert ledger.predict_rows(f"outer{i}/search") <= set(train)


def test_nested_fold_reports_carry_search_trace(make_dataset):
    header, rows = linear_rows(24, seed=6)
    ds = make_dataset(header, rows, target="y")
    spec = PipelineSpec(
        steps=(StepSpec("model", "ridge", {"alpha": Choice([0.01, 1.0])}),),
        problem_type="regression",
    )
    report = nested_evaluate(ds, spec, ds.row_ids, seed=0, **nested_args(budget=2))
    assert report.kind == "nested-cv"
    for f in report.folds:
        assert f.search is not None
        assert len(f.search["entries"]) == 2
        assert f.search["exhausted"]
        # the chosen config is the trace's best entry
        best = f.search["entries"][f.search["best_index"]]
        assert f.config == best["config"]


def test_nested_objective_must_be_reported(make_dataset):
    header, rows = linear_rows(20, seed=5)
    ds = make_dataset(header, rows, target="y")
    with pytest.raises(WorkbenchError, match="objective"):
        nested_evaluate(
            ds, SCALED_RIDGE, ds.row_ids,
            outer=CVScheme(k=2), inner=CVScheme(k=2),
            strategy=SearchStrategy(budget=2),
            metric_ids=["mae"], objective_metric="r2", seed=0,
        )


def test_nested_deterministic_and_jobs_invariant(make_dataset):
    header, rows = linear_rows(30, seed=14)
    ds = make_dataset(header, rows, target="y")
    spec = PipelineSpec(
        steps=(StepSpec("model", "ridge", {"alpha": Choice([0.01, 1.0, 10.0])}),),
        problem_type="regression",
    )
    a = nested_evaluate(ds, spec, ds.row_ids, seed=17, jobs=1, **nested_args())
    b = nested_evaluate(ds, spec, ds.row_ids, seed=17, jobs=3, **nested_args())
    assert a.digest() == b.digest()


# ---------------------------------------------------------------------------
# winning config and the final holdout


def fold(name, r2_score, config):
    return FoldResult(name, 10, 5, config, {"r2": r2_score})


def report_with(folds, objective="r2"):
    return EvalReport(
        kind="nested-cv", problem_type="regression", metric_ids=("r2",),
        folds=folds, aggregate={},
        provenance={"objective_metric": objective},
    )


def cfg(alpha):
    return [{"estimator": "ridge", "params": {"alpha": alpha}}]


def test_winning_config_takes_best_fold():
    report = report_with([
        fold("0", 0.5, cfg(1.0)),
        fold("1", 0.9, cfg(0.1)),
        fold("2", 0.7, cfg(10.0)),
    ])
    assert winning_config(report).steps[0].params["alpha"] == 0.1


def test_winning_config_tie_keeps_lowest_fold():
    report = report_with([
        fold("0", 0.9, cfg(1.0)),
        fold("1", 0.9, cfg(0.1)),
    ])
    assert winning_config(report).steps[0].params["alpha"] == 1.0


def test_winning_config_skips_failed_folds():
    failed = FoldResult("0", 10, 5, None, {"r2": None}, failed=True, error="x")
    report = report_with([failed, fold("1", 0.3, cfg(5.0))])
    assert winning_config(report).steps[0].params["alpha"] == 5.0


def test_final_test_fits_once_and_never_trains_on_holdout(make_dataset):
    header, rows = linear_rows(32, seed=13)
    ds = make_dataset(header, rows, target="y")
    split = global_split(ds, 0.25, seed=0)
    ledger = AccessLedger()
    report = final_test(ds, SCALED_RIDGE, split, ["r2"], seed=1, ledger=ledger)
    assert report.kind == "holdout"
    assert len(report.folds) == 1
    assert report.folds[0].fold == "holdout"
    assert report.folds[0].train_size == len(split.train_ids)
    assert ledger.fit_rows() == set(split.train_ids)
    assert not ledger.fit_rows() & set(split.test_ids)
    assert report.folds[0].scores["r2"] > 0.9


def test_final_test_accepts_chosen_config(make_dataset):
    header, rows = linear_rows(24, seed=1)
    ds = make_dataset(header, rows, target="y")
    split = global_split(ds, 0.25, seed=0)
    spec = PipelineSpec(
        steps=(StepSpec("model", "ridge", {"alpha": Choice([0.1, 1.0])}),),
        problem_type="regression",
    )
    from tabwb.pipeline import ParamConfig, StepConfig

    config = ParamConfig([StepConfig("ridge", {"alpha": 0.1})])
    report = final_test(ds, spec, split, ["r2"], seed=0, config=config)
    assert report.folds[0].config == config.to_doc()


# ---------------------------------------------------------------------------
# stratified reporting and subgroup runs


def stratified_dataset(make_dataset):
    rows = []
    for i in range(36):
        grp = "m" if i % 2 else "f"
        x = float(i)
        rows.append([x, grp, 2.0 * x + (1.0 if grp == "m" else 0.0)])
    return make_dataset(["x", "grp", "y"], rows, target="y", non_input=["grp"])


def test_stratified_report_scores_each_level(make_dataset):
    ds = stratified_dataset(make_dataset)
    report = evaluate(ds, SCALED_RIDGE, ds.row_ids, CVScheme(k=3, seed=0),
                      ["r2"], seed=0, stratify_by="grp")
    assert report.stratified["column"] == "grp"
    names = [g["group"] for g in report.stratified["groups"]]
    assert names == ["overall", "f", "m"]
    overall = report.stratified["groups"][0]
    assert overall["n"] == 36
    for g in report.stratified["groups"]:
        assert g["scores"]["r2"] is not None


def test_stratified_single_class_group_is_flagged_not_dropped(make_dataset):
    # group "solo" holds one class only: roc_auc is undefined there
    rows = []
    for i in range(20):
        rows.append([float(i % 7), "a" if i % 2 else "b", "mixed"])
    for i in range(20, 26):
        rows.append([float(i % 5), "a", "solo"])
    ds = make_dataset(["x", "cls", "grp"], rows, target="cls", non_input=["grp"])
    spec = PipelineSpec(
        steps=(StepSpec("model", "knn", {"k": Fixed(3)}),),
        problem_type="binary",
    )
    report = evaluate(ds, spec, ds.row_ids, CVScheme(k=2, seed=1),
                      ["accuracy", "roc_auc"], seed=0, stratify_by="grp")
    solo = next(g for g in report.stratified["groups"] if g["group"] == "solo")
    assert solo["scores"]["roc_auc"] is None
    assert "roc_auc" in solo["flags"]
    assert solo["scores"]["accuracy"] is not None


def test_subset_run_filters_rows(make_dataset):
    ds = stratified_dataset(make_dataset)
    report = subset_run(
        ds, "grp", "f", evaluate,
        spec=SCALED_RIDGE, train_rows=ds.row_ids,
        scheme=CVScheme(k=3, seed=0), metric_ids=["r2"], seed=0,
    )
    assert report.subset == {"column": "grp", "level": "f", "n_rows": 18}
    assert report.provenance["n_rows"] == 18


def test_subset_runs_partition_the_rows(make_dataset):
    ds = stratified_dataset(make_dataset)
    sizes = []
    for level in ("f", "m"):
        r = subset_run(
            ds, "grp", level, evaluate,
            spec=SCALED_RIDGE, train_rows=ds.row_ids,
            scheme=CVScheme(k=3, seed=0), metric_ids=["r2"], seed=0,
        )
        sizes.append(r.provenance["n_rows"])
    assert sum(sizes) == ds.n_rows


def test_subset_run_rejects_bad_columns(make_dataset):
    ds = stratified_dataset(make_dataset)
    with pytest.raises(WorkbenchError, match="non-input"):
        subset_run(ds, "x", "1.0", evaluate, spec=SCALED_RIDGE,
                   train_rows=ds.row_ids, scheme=CVScheme(k=2),
                   metric_ids=["r2"], seed=0)
    with pytest.raises(WorkbenchError, match="no rows"):
        subset_run(ds, "grp", "zzz", evaluate, spec=SCALED_RIDGE,
                   train_rows=ds.row_ids, scheme=CVScheme(k=2),
                   metric_ids=["r2"], seed=0)

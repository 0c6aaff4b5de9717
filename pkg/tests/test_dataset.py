"""CSV loading, dtype inference, QC utilities, and the global split."""

import itertools
import math
import random

import pytest

from tabwb.dataset import (
    DTYPE_BINARY,
    DTYPE_CATEGORICAL,
    DTYPE_CONTINUOUS,
    ROLE_INPUT,
    ROLE_NON_INPUT,
    ROLE_TARGET,
    detect_outliers,
    drop_flagged,
    find_duplicate_columns,
    global_split,
    histogram,
    load_csv,
    set_role,
    summarize,
)
from tabwb.errors import ParseError, WorkbenchError

from conftest import write_csv


# ---------------------------------------------------------------------------
# loading and inference


def test_dtype_inference(make_dataset):
    ds = make_dataset(
        ["num", "two", "cat"],
        [[1.5, "a", "x"], [2.0, "b", "y"], [3.5, "a", "z"]],
    )
    assert ds.column("num").dtype == DTYPE_CONTINUOUS
    assert ds.column("two").dtype == DTYPE_BINARY
    assert ds.column("cat").dtype == DTYPE_CATEGORICAL
    assert ds.column("two").levels == ("a", "b")


def test_two_distinct_numbers_infer_binary(make_dataset):
    # the two-distinct rule wins over numeric-ness
    ds = make_dataset(["flag"], [[0], [1], [0], [1]])
    assert ds.column("flag").dtype == DTYPE_BINARY
    assert ds.column("flag").levels == ("0", "1")


def test_dtype_override_beats_inference(make_dataset):
    ds = make_dataset(["flag"], [[0], [1], [0]], dtype_overrides={"flag": "continuous"})
    assert ds.column("flag").dtype == DTYPE_CONTINUOUS
    assert ds.column("flag").values.tolist() == [0.0, 1.0, 0.0]


def test_missing_tokens_set_mask(make_dataset):
    ds = make_dataset(
        ["a", "b"],
        [["1.0", "x"], ["", "NA"], ["3.0", "y"], ["4.5", "z"]],
    )
    assert ds.column("a").dtype == DTYPE_CONTINUOUS
    assert ds.column("a").missing.tolist() == [False, True, False, False]
    assert math.isnan(ds.column("a").values[1])
    assert ds.column("b").missing.tolist() == [False, True, False, False]
    assert ds.column("b").values[1] is None


def test_custom_missing_tokens(make_dataset):
    ds = make_dataset(["a"], [["1"], ["?"], ["3"]], missing_tokens=["?"])
    assert ds.column("a").missing.tolist() == [False, True, False]


def test_row_ids_are_positions(make_dataset):
    ds = make_dataset(["a"], [[1], [2], [3]])
    assert ds.row_ids == (0, 1, 2)
    assert ds.positions([2, 0]).tolist() == [2, 0]


def test_duplicate_header_rejected(tmp_path):
    path = write_csv(tmp_path / "dup.csv", ["a", "a"], [["1", "2"]])
    with pytest.raises(ParseError, match="duplicate"):
        load_csv(path)


def test_ragged_row_rejected(tmp_path):
    path = tmp_path / "ragged.csv"
    path.write_text("a,b\n1,2\n3\n")
    with pytest.raises(ParseError, match="line 3"):
        load_csv(path)


def test_empty_file_rejected(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("")
    with pytest.raises(ParseError, match="empty"):
        load_csv(path)


def test_non_numeric_cell_under_continuous_override(tmp_path):
    path = write_csv(tmp_path / "bad.csv", ["a"], [["1"], ["oops"], ["3"]])
    with pytest.raises(ParseError, match="oops"):
        load_csv(path, dtype_overrides={"a": "continuous"})


def test_roles_default_and_reassign(make_dataset):
    ds = make_dataset(["a", "b"], [[1, 2], [3, 4]])
    assert all(c.role == ROLE_INPUT for c in ds.columns)
    ds = set_role(ds, "b", ROLE_TARGET)
    assert ds.column("b").role == ROLE_TARGET
    assert ds.column("a").role == ROLE_INPUT
    with pytest.raises(WorkbenchError):
        set_role(ds, "a", "nonsense")
    with pytest.raises(WorkbenchError):
        set_role(ds, "missing", ROLE_NON_INPUT)


# ---------------------------------------------------------------------------
# summaries


def test_summary_matches_hand_stats(make_dataset):
    ds = make_dataset(["v"], [[1], [2], [3], [4]])
    s = summarize(ds, "v")
    assert s.n == 4 and s.n_missing == 0
    assert s.mean == 2.5
    # population std of 1..4 = sqrt(1.25)
    assert abs(s.std - math.sqrt(1.25)) < 1e-12
    # linear interpolation between order statistics
    assert s.q25 == 1.75 and s.q50 == 2.5 and s.q75 == 3.25


def test_summary_skips_missing(make_dataset):
    ds = make_dataset(["v"], [[1], [""], [3], [5]])
    s = summarize(ds, "v")
    assert s.n == 3 and s.n_missing == 1
    assert s.mean == 3.0


def test_summary_categorical_levels(make_dataset):
    ds = make_dataset(["c"], [["a"], ["b"], ["a"], ["c"]])
    s = summarize(ds, "c")
    assert s.level_counts == {"a": 2, "b": 1, "c": 1}
    assert s.mean is None


def test_histogram_counts_partition_observed(make_dataset):
    ds = make_dataset(["v"], [[v] for v in [1, 2, 2, 3, "", 9]])
    edges, counts = histogram(ds, "v", bins=4)
    assert len(edges) == 5
    assert edges[0] == 1.0 and edges[-1] == 9.0
    assert sum(counts) == 5  # the missing cell is not binned
    # bins [1,3) [3,5) [5,7) [7,9]; the right edge is inclusive
    assert counts == [3, 1, 0, 1]


def test_histogram_constant_column_single_bin(make_dataset):
    ds = make_dataset(["v"], [[7], [7], [7]], dtype_overrides={"v": "continuous"})
    edges, counts = histogram(ds, "v")
    assert edges == [7.0, 7.0]
    assert counts == [3]


def test_histogram_rejects_categorical(make_dataset):
    ds = make_dataset(["c"], [["a"], ["b"], ["c"]])
    with pytest.raises(WorkbenchError, match="continuous"):
        histogram(ds, "c")


# ---------------------------------------------------------------------------
# outliers


def test_outlier_std_oracle(make_dataset):
    # hand-checked: mean=10.0 (approx), only the 50.0 exceeds 1.5 sigma
    vals = [0.0, 0.1, -0.2, 0.05, 50.0]
    ds = make_dataset(["v"], [[v] for v in vals])
    mask = detect_outliers(ds, "v", method="std", k=1.5)
    mean = sum(vals) / len(vals)
    std = math.sqrt(sum((v - mean) ** 2 for v in vals) / len(vals))
    expected = [abs(v - mean) > 1.5 * std for v in vals]
    assert mask.flags.tolist() == expected
    assert mask.flags.tolist() == [False, False, False, False, True]


def test_outlier_quantile_bounds(make_dataset):
    ds = make_dataset(["v"], [[v] for v in range(1, 11)])
    mask = detect_outliers(ds, "v", method="quantile", lo=0.1, hi=0.9)
    # q10=1.9, q90=9.1 under linear interpolation: 1 and 10 fall outside
    assert mask.flags.tolist() == [True] + [False] * 8 + [True]


def test_outlier_missing_never_flagged(make_dataset):
    ds = make_dataset(["v"], [[0], [""], [100], [1]])
    mask = detect_outliers(ds, "v", method="std", k=0.5)
    assert not mask.flags[1]


def test_outlier_requires_continuous(make_dataset):
    ds = make_dataset(["c"], [["a"], ["b"], ["c"]])
    with pytest.raises(WorkbenchError):
        detect_outliers(ds, "c")


def test_drop_rows_keeps_row_ids(make_dataset):
    ds = make_dataset(["v", "w"], [[0, 1], [100, 2], [1, 3]])
    mask = detect_outliers(ds, "v", method="std", k=1.0)
    assert mask.flags.tolist() == [False, True, False]
    out = drop_flagged(ds, mask, mode="drop-rows")
    assert out.row_ids == (0, 2)
    assert out.column("w").values.tolist() == [1.0, 3.0]


def test_to_missing_preserves_shape(make_dataset):
    ds = make_dataset(["v"], [[0], [100], [1]])
    mask = detect_outliers(ds, "v", method="std", k=1.0)
    out = drop_flagged(ds, mask, mode="to-missing")
    assert out.n_rows == 3
    assert out.column("v").missing.tolist() == [False, True, False]


# ---------------------------------------------------------------------------
# duplicate columns


def brute_force_duplicates(columns, tol):
    """Quadratic reference: identical missing masks + cells within tol."""
    pairs = []
    for (i, a), (j, b) in itertools.combinations(enumerate(columns), 2):
        name_a, vals_a, miss_a, cont_a = a
        name_b, vals_b, miss_b, cont_b = b
        if cont_a != cont_b or miss_a != miss_b:
            continue
        obs = [(va, vb) for va, vb, m in zip(vals_a, vals_b, miss_a) if not m]
        if cont_a:
            if all(abs(va - vb) <= tol for va, vb in obs):
                pairs.append((name_a, name_b))
        else:
            if all(va == vb for va, vb in obs):
                pairs.append((name_a, name_b))
    return pairs


def test_duplicate_columns_match_brute_force(make_dataset):
    rng = random.Random(11)
    n = 12
    base = [round(rng.uniform(0, 1), 3) for _ in range(n)]
    cols = {
        "a": base,
        "b": list(base),                       # exact duplicate
        "c": [v + 1e-4 for v in base],          # near duplicate
        "d": [rng.uniform(0, 1) for _ in range(n)],
    }
    header = list(cols)
    rows = [[cols[h][i] for h in header] for i in range(n)]
    ds = make_dataset(header, rows)

    for tol in (0.0, 1e-3):
        got = find_duplicate_columns(ds, tol=tol)
        want = brute_force_duplicates(
            [(h, cols[h], [False] * n, True) for h in header], tol
        )
        assert got == want
    assert ("a", "b") in find_duplicate_columns(ds, tol=0.0)
    assert ("a", "c") not in find_duplicate_columns(ds, tol=0.0)
    assert ("a", "c") in find_duplicate_columns(ds, tol=1e-3)


def test_duplicate_columns_respect_missing_mask(make_dataset):
    ds = make_dataset(["a", "b"], [[1, 1], ["", 2], [3, 3]])
    assert find_duplicate_columns(ds) == []


# ---------------------------------------------------------------------------
# global split


def split_invariants(ds, split, n_test):
    assert sorted(split.train_ids + split.test_ids) == list(ds.row_ids)
    assert set(split.train_ids).isdisjoint(split.test_ids)
    assert len(split.test_ids) == n_test
    assert split.train_ids == tuple(sorted(split.train_ids))
    assert split.test_ids == tuple(sorted(split.test_ids))


def test_split_sizes_exhaustive_small_n(make_dataset):
    # every n up to 12 x a grid of fractions: size law |test| = round(f*n),
    # clamped to keep both sides non-empty
    for n in range(2, 13):
        ds = make_dataset(["v"], [[i] for i in range(n)])
        for frac in (0.1, 0.2, 0.25, 1 / 3, 0.5, 0.75, 0.9):
            split = global_split(ds, frac, seed=0)
            expected = min(max(int(math.floor(frac * n + 0.5)), 1), n - 1)
            split_invariants(ds, split, expected)


def test_split_seed_determinism(make_dataset):
    ds = make_dataset(["v"], [[i] for i in range(20)])
    a = global_split(ds, 0.25, seed=9)
    b = global_split(ds, 0.25, seed=9)
    c = global_split(ds, 0.25, seed=10)
    assert a.test_ids == b.test_ids
    assert a.test_ids != c.test_ids


def test_split_fraction_bounds(make_dataset):
    ds = make_dataset(["v"], [[i] for i in range(4)])
    for bad in (0.0, 1.0, -0.1, 1.1):
        with pytest.raises(WorkbenchError):
            global_split(ds, bad)


def test_stratified_split_proportions(make_dataset):
    # 30 rows: 10 "a", 20 "b"; test 30% = 9 rows -> 3 a's, 6 b's
    rows = [[i, "a" if i < 10 else "b"] for i in range(30)]
    ds = make_dataset(["v", "g"], rows)
    split = global_split(ds, 0.3, stratify_by="g", seed=1)
    split_invariants(ds, split, 9)
    labels = ["a" if rid < 10 else "b" for rid in split.test_ids]
    assert labels.count("a") == 3 and labels.count("b") == 6


def test_stratified_split_within_one_of_share(make_dataset):
    rng = random.Random(4)
    rows = [[i, rng.choice(["x", "y", "z"])] for i in range(40)]
    ds = make_dataset(["v", "g"], rows)
    col = [r[1] for r in rows]
    split = global_split(ds, 0.25, stratify_by="g", seed=2)
    n_test = len(split.test_ids)
    for level in "xyz":
        total = col.count(level)
        got = sum(1 for rid in split.test_ids if col[rid] == level)
        exact = n_test * total / 40
        assert abs(got - exact) <= 1.0


def test_grouped_split_keeps_groups_whole(make_dataset):
    rows = [[i, f"g{i // 4}"] for i in range(24)]
    ds = make_dataset(["v", "grp"], rows)
    split = global_split(ds, 0.25, group_by="grp", seed=3)
    groups_test = {rows[rid][1] for rid in split.test_ids}
    groups_train = {rows[rid][1] for rid in split.train_ids}
    assert groups_test.isdisjoint(groups_train)
    # whole groups: test size is a multiple of the group size
    assert len(split.test_ids) % 4 == 0
    assert len(split.test_ids) >= 6  # at least the requested count


def test_stratify_and_group_mutually_exclusive(make_dataset):
    ds = make_dataset(["v", "g"], [[1, "a"], [2, "b"], [3, "a"], [4, "b"]])
    with pytest.raises(WorkbenchError):
        global_split(ds, 0.5, stratify_by="g", group_by="g")

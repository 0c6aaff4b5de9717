"""Tabular dataset core: loading, roles, QC utilities, and the global split.

A Dataset is an immutable column-major table. Every column carries a role
(input-feature / target / non-input), a data type (continuous / binary /
categorical) and an explicit missing mask. All mutating utilities return a
new Dataset value; row identifiers are assigned once at load time and are
stable across row drops, so split indices and fold assignments always refer
to the same physical rows.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ParseError, WorkbenchError

ROLE_INPUT = "input-feature"
ROLE_TARGET = "target"
ROLE_NON_INPUT = "non-input"
ROLES = (ROLE_INPUT, ROLE_TARGET, ROLE_NON_INPUT)

DTYPE_CONTINUOUS = "continuous"
DTYPE_BINARY = "binary"
DTYPE_CATEGORICAL = "categorical"
DTYPES = (DTYPE_CONTINUOUS, DTYPE_BINARY, DTYPE_CATEGORICAL)

DEFAULT_MISSING_TOKENS = frozenset({"", "NA", "NaN", "nan", "null"})


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Column:
    """One named column: values plus role, dtype, and missing mask.

    Continuous columns store float64 (NaN at missing positions, the mask
    is authoritative); binary and categorical columns store the original
    cell text with None at missing positions and carry their ordered
    (lexicographic) level list.
    """

    name: str
    role: str
    dtype: str
    values: np.ndarray
    missing: np.ndarray
    levels: tuple[str, ...] | None = None

    def __post_init__(self):
        _frozen(self.values)
        _frozen(self.missing)
        if self.role not in ROLES:
            raise WorkbenchError(f"unknown role {self.role!r} for column {self.name!r}")
        if self.dtype not in DTYPES:
            raise WorkbenchError(f"unknown dtype {self.dtype!r} for column {self.name!r}")
        if self.dtype == DTYPE_BINARY and self.levels is not None and len(self.levels) != 2:
            raise WorkbenchError(
                f"binary column {self.name!r} must have exactly 2 levels, got {self.levels}"
            )

    @property
    def n_rows(self) -> int:
        return len(self.values)

    def non_missing(self) -> np.ndarray:
        return self.values[~self.missing]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Column):
            return NotImplemented
        if (self.name, self.role, self.dtype, self.levels) != (
            other.name, other.role, other.dtype, other.levels,
        ):
            return False
        if not np.array_equal(self.missing, other.missing):
            return False
        # Values compared only at observed positions; missing cells are
        # NaN/None placeholders with no meaning.
        keep = ~self.missing
        a, b = self.values[keep], other.values[keep]
        if self.dtype == DTYPE_CONTINUOUS:
            return bool(np.array_equal(a, b))
        return bool(np.array_equal(a.astype(object), b.astype(object)))

    __hash__ = None


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable ordered collection of equally long, uniquely named columns."""

    columns: tuple[Column, ...]
    row_ids: tuple[int, ...]

    def __post_init__(self):
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            dupes = sorted({n for n in names if names.count(n) > 1})
            raise WorkbenchError(f"duplicate column names: {dupes}")
        for col in self.columns:
            if col.n_rows != len(self.row_ids):
                raise WorkbenchError(
                    f"column {col.name!r} has {col.n_rows} rows, expected {len(self.row_ids)}"
                )

    @property
    def n_rows(self) -> int:
        return len(self.row_ids)

    @cached_property
    def _by_name(self) -> dict[str, int]:
        return {c.name: i for i, c in enumerate(self.columns)}

    @cached_property
    def _id_to_pos(self) -> dict[int, int]:
        return {rid: i for i, rid in enumerate(self.row_ids)}

    def column_names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.columns)

    def column(self, name: str) -> Column:
        idx = self._by_name.get(name)
        if idx is None:
            raise WorkbenchError(f"unknown column {name!r}")
        return self.columns[idx]

    def positions(self, row_ids: Iterable[int]) -> np.ndarray:
        """Map stable row ids to current positional indices."""
        try:
            return np.array([self._id_to_pos[r] for r in row_ids], dtype=np.intp)
        except KeyError as exc:
            raise WorkbenchError(f"unknown row id {exc.args[0]}") from None

    def columns_with_role(self, role: str) -> tuple[Column, ...]:
        return tuple(c for c in self.columns if c.role == role)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return self.row_ids == other.row_ids and self.columns == other.columns

    __hash__ = None


@dataclass(frozen=True)
class SummaryStats:
    """Per-column summary over non-missing cells.

    `n` counts observed cells; moments are None when undefined (all-missing
    or non-continuous columns).
    """

    n: int
    n_missing: int
    mean: float | None
    std: float | None
    min: float | None
    max: float | None
    q25: float | None
    q50: float | None
    q75: float | None
    n_unique: int
    level_counts: dict[str, int] | None

    def to_doc(self) -> dict:
        return {
            "n": self.n, "n_missing": self.n_missing, "mean": self.mean,
            "std": self.std, "min": self.min, "max": self.max,
            "q25": self.q25, "q50": self.q50, "q75": self.q75,
            "n_unique": self.n_unique, "level_counts": self.level_counts,
        }


@dataclass(frozen=True)
class OutlierMask:
    """Row flags for one column; missing cells are never flagged."""

    column: str
    flags: np.ndarray
    method: str

    def __post_init__(self):
        _frozen(self.flags)

    @property
    def n_flagged(self) -> int:
        return int(self.flags.sum())


@dataclass(frozen=True)
class SplitIndices:
    """A global train/test partition over stable row ids."""

    train_ids: tuple[int, ...]
    test_ids: tuple[int, ...]
    seed: int
    strategy: str

    def __post_init__(self):
        if set(self.train_ids) & set(self.test_ids):
            raise WorkbenchError("train and test ids overlap")

    def to_doc(self) -> dict:
        return {
            "train_ids": list(self.train_ids),
            "test_ids": list(self.test_ids),
            "seed": self.seed,
            "strategy": self.strategy,
        }


# ---------------------------------------------------------------------------
# loading


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def _build_column(name: str, cells: list[str], missing_tokens: frozenset[str],
                  dtype_override: str | None) -> Column:
    missing = np.array([c in missing_tokens for c in cells], dtype=bool)
    observed = [c for c, m in zip(cells, missing) if not m]
    distinct = sorted(set(observed))
    all_numeric = bool(observed) and all(_is_number(c) for c in observed)

    if dtype_override is not None:
        if dtype_override not in DTYPES:
            raise ParseError(f"column {name!r}: unknown dtype override {dtype_override!r}")
        dtype = dtype_override
    elif len(distinct) == 2:
        dtype = DTYPE_BINARY
    elif all_numeric or not observed:
        dtype = DTYPE_CONTINUOUS
    else:
        dtype = DTYPE_CATEGORICAL

    if dtype == DTYPE_CONTINUOUS:
        values = np.full(len(cells), np.nan, dtype=np.float64)
        for i, (cell, miss) in enumerate(zip(cells, missing)):
            if miss:
                continue
            if not _is_number(cell):
                raise ParseError(
                    f"column {name!r}, line {i + 2}: cell {cell!r} is not numeric"
                )
            values[i] = float(cell)
        return Column(name, ROLE_INPUT, dtype, values, missing)

    if dtype == DTYPE_BINARY and len(distinct) != 2:
        raise ParseError(
            f"column {name!r}: binary dtype requires exactly 2 distinct values, got {len(distinct)}"
        )
    values = np.array([None if m else c for c, m in zip(cells, missing)], dtype=object)
    return Column(name, ROLE_INPUT, dtype, values, missing, levels=tuple(distinct))


def load_csv(path, dtype_overrides: Mapping[str, str] | None = None,
             missing_tokens: Iterable[str] = DEFAULT_MISSING_TOKENS) -> Dataset:
    """Load an RFC-4180-style CSV with a mandatory header row.

    Dtype inference: exactly two distinct observed values -> binary;
    otherwise all-numeric -> continuous; otherwise categorical. Explicit
    overrides win. Cells matching a missing token set the missing mask.
    Initially every column has the input-feature role.
    """
    overrides = dict(dtype_overrides or {})
    tokens = frozenset(missing_tokens)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: file is empty") from None
        if len(set(header)) != len(header):
            dupes = sorted({h for h in header if header.count(h) > 1})
            raise ParseError(f"{path}: duplicate header names {dupes}")
        body: list[list[str]] = []
        for lineno, record in enumerate(reader, start=2):
            if not record:
                continue
            if len(record) != len(header):
                raise ParseError(
                    f"{path}, line {lineno}: expected {len(header)} fields, got {len(record)}"
                )
            body.append(record)

    unknown = sorted(set(overrides) - set(header))
    if unknown:
        raise ParseError(f"dtype override for unknown column(s): {unknown}")

    columns = []
    for j, name in enumerate(header):
        cells = [record[j] for record in body]
        columns.append(_build_column(name, cells, tokens, overrides.get(name)))
    return Dataset(tuple(columns), tuple(range(len(body))))


# ---------------------------------------------------------------------------
# role and QC utilities


def set_role(ds: Dataset, column: str, role: str) -> Dataset:
    """Return a new Dataset with `column` reassigned to `role`."""
    if role not in ROLES:
        raise WorkbenchError(f"unknown role {role!r}")
    ds.column(column)  # raises on unknown column
    cols = tuple(replace(c, role=role) if c.name == column else c for c in ds.columns)
    return Dataset(cols, ds.row_ids)


def _population_std(values: np.ndarray) -> float:
    return float(np.sqrt(np.mean((values - values.mean()) ** 2)))


def detect_outliers(ds: Dataset, column: str, method: str = "std",
                    k: float = 3.0, lo: float = 0.0, hi: float = 1.0) -> OutlierMask:
    """Flag outlying cells in a continuous column.

    method="std": flag cells with |x - mean| > k * std (population std over
    observed cells). method="quantile": flag cells strictly below the
    lo-quantile or strictly above the hi-quantile. Missing cells are never
    flagged.
    """
    col = ds.column(column)
    if col.dtype != DTYPE_CONTINUOUS:
        raise WorkbenchError(f"outlier detection requires a continuous column, {column!r} is {col.dtype}")
    observed = col.non_missing()
    if len(observed) == 0:
        raise WorkbenchError(f"column {column!r} has no observed values")

    flags = np.zeros(ds.n_rows, dtype=bool)
    keep = ~col.missing
    if method == "std":
        if k <= 0:
            raise WorkbenchError("std method requires k > 0")
        mean = float(observed.mean())
        std = _population_std(observed)
        flags[keep] = np.abs(col.values[keep] - mean) > k * std
        desc = f"std k={k}"
    elif method == "quantile":
        if not (0.0 <= lo < hi <= 1.0):
            raise WorkbenchError("quantile method requires 0 <= lo < hi <= 1")
        q_lo = float(np.quantile(observed, lo))
        q_hi = float(np.quantile(observed, hi))
        flags[keep] = (col.values[keep] < q_lo) | (col.values[keep] > q_hi)
        desc = f"quantile({lo},{hi})"
    else:
        raise WorkbenchError(f"unknown outlier method {method!r}")
    return OutlierMask(column=column, flags=flags, method=desc)


def drop_flagged(ds: Dataset, mask: OutlierMask, mode: str = "drop-rows") -> Dataset:
    """Dispose of flagged cells: remove whole rows, or set them to missing."""
    if len(mask.flags) != ds.n_rows:
        raise WorkbenchError("mask shape does not match dataset")
    ds.column(mask.column)
    if not mask.flags.any():
        return ds

    if mode == "drop-rows":
        keep = ~mask.flags
        cols = tuple(
            Column(c.name, c.role, c.dtype, c.values[keep].copy(), c.missing[keep].copy(), c.levels)
            for c in ds.columns
        )
        row_ids = tuple(rid for rid, k in zip(ds.row_ids, keep) if k)
        return Dataset(cols, row_ids)
    if mode == "to-missing":
        cols = []
        for c in ds.columns:
            if c.name != mask.column:
                cols.append(c)
                continue
            missing = c.missing | mask.flags
            values = c.values.copy()
            if c.dtype == DTYPE_CONTINUOUS:
                values[mask.flags] = np.nan
            else:
                values[mask.flags] = None
            cols.append(Column(c.name, c.role, c.dtype, values, missing, c.levels))
        return Dataset(tuple(cols), ds.row_ids)
    raise WorkbenchError(f"unknown disposition mode {mode!r}")


def find_duplicate_columns(ds: Dataset, tol: float = 0.0) -> list[tuple[str, str]]:
    """Report (kept, dropped-candidate) pairs of near-duplicate columns.

    Two columns pair when their missing masks are identical and their
    aligned observed cells differ by at most `tol` (continuous) or are
    identical (binary/categorical). Report only; nothing is mutated.
    """
    if tol < 0:
        raise WorkbenchError("tol must be >= 0")
    pairs = []
    for i in range(len(ds.columns)):
        for j in range(i + 1, len(ds.columns)):
            a, b = ds.columns[i], ds.columns[j]
            a_cont = a.dtype == DTYPE_CONTINUOUS
            if a_cont != (b.dtype == DTYPE_CONTINUOUS):
                continue
            if not np.array_equal(a.missing, b.missing):
                continue
            keep = ~a.missing
            if a_cont:
                if np.all(np.abs(a.values[keep] - b.values[keep]) <= tol):
                    pairs.append((a.name, b.name))
            else:
                if np.array_equal(a.values[keep].astype(object), b.values[keep].astype(object)):
                    pairs.append((a.name, b.name))
    return pairs


def summarize(ds: Dataset, column: str) -> SummaryStats:
    """Summary statistics over the observed cells of one column.

    Quantiles interpolate linearly between the closest order statistics.
    """
    col = ds.column(column)
    observed = col.non_missing()
    n = len(observed)
    n_missing = col.n_rows - n

    level_counts = None
    if col.dtype != DTYPE_CONTINUOUS:
        level_counts = {}
        for level in col.levels or ():
            level_counts[level] = int(np.sum(observed.astype(object) == level))

    if n == 0 or col.dtype != DTYPE_CONTINUOUS:
        n_unique = len(set(observed.tolist())) if n else 0
        return SummaryStats(n, n_missing, None, None, None, None, None, None, None,
                            n_unique, level_counts)

    q25, q50, q75 = (float(np.quantile(observed, q)) for q in (0.25, 0.5, 0.75))
    return SummaryStats(
        n=n, n_missing=n_missing,
        mean=float(observed.mean()), std=_population_std(observed),
        min=float(observed.min()), max=float(observed.max()),
        q25=q25, q50=q50, q75=q75,
        n_unique=len(np.unique(observed)), level_counts=level_counts,
    )


def histogram(ds: Dataset, column: str, bins: int = 12) -> tuple[list[float], list[int]]:
    """Equal-width bin edges and counts over a continuous column's observed cells.

    A constant column collapses to the single bin [v, v] so renderers see
    one bar instead of an arbitrary padded range.
    """
    col = ds.column(column)
    if col.dtype != DTYPE_CONTINUOUS:
        raise WorkbenchError(
            f"histogram requires a continuous column, {column!r} is {col.dtype}"
        )
    observed = col.non_missing()
    if len(observed) == 0:
        raise WorkbenchError(f"column {column!r} has no observed values")
    lo, hi = float(observed.min()), float(observed.max())
    if lo == hi:
        return [lo, hi], [len(observed)]
    counts, edges = np.histogram(observed, bins=bins, range=(lo, hi))
    return [float(e) for e in edges], [int(c) for c in counts]


# ---------------------------------------------------------------------------
# global train/test split


def _round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


def _proportional_counts(total: int, group_sizes: Sequence[int]) -> list[int]:
    """Largest-remainder allocation of `total` across groups; each count is
    within 1 of the exact proportional share."""
    n = sum(group_sizes)
    exact = [total * g / n for g in group_sizes]
    counts = [int(np.floor(e)) for e in exact]
    remainders = [e - c for e, c in zip(exact, counts)]
    short = total - sum(counts)
    order = sorted(range(len(group_sizes)), key=lambda i: (-remainders[i], i))
    for i in order[:short]:
        counts[i] += 1
    return counts


def global_split(ds: Dataset, test_fraction: float, stratify_by: str | None = None,
                 group_by: str | None = None, seed: int = 0) -> SplitIndices:
    """One-time train/test partition made before any modeling.

    |test| = round(test_fraction * n_rows). Stratified splits keep each
    level's test count within 1 of its proportional share; grouped splits
    keep every group wholly on one side. Deterministic in `seed`.
    """
    if not (0.0 < test_fraction < 1.0):
        raise WorkbenchError("test_fraction must lie strictly between 0 and 1")
    if stratify_by is not None and group_by is not None:
        raise WorkbenchError("stratify_by and group_by are mutually exclusive")
    if ds.n_rows < 2:
        raise WorkbenchError("need at least 2 rows to split")

    rng = np.random.default_rng(seed)
    n = ds.n_rows
    n_test = min(max(_round_half_up(test_fraction * n), 1), n - 1)
    ids = np.array(ds.row_ids, dtype=np.int64)

    if stratify_by is not None:
        col = ds.column(stratify_by)
        if col.dtype == DTYPE_CONTINUOUS:
            raise WorkbenchError("stratify column must be binary or categorical")
        labels = col.values.astype(object)
        levels = list(col.levels or ())
        per_level = []
        for level in levels:
            members = ids[(labels == level) & ~col.missing]
            if len(members) < 2:
                raise WorkbenchError(f"stratum {level!r} has fewer than 2 rows")
            per_level.append(members)
        if col.missing.any():
            raise WorkbenchError("stratify column has missing values")
        counts = _proportional_counts(n_test, [len(m) for m in per_level])
        test: list[int] = []
        for members, take in zip(per_level, counts):
            perm = rng.permutation(len(members))
            test.extend(members[perm[:take]].tolist())
        strategy = f"stratified({stratify_by})"
    elif group_by is not None:
        col = ds.column(group_by)
        if col.missing.any():
            raise WorkbenchError("group column has missing values")
        labels = col.values.astype(object) if col.dtype != DTYPE_CONTINUOUS else col.values
        groups = sorted({str(v) for v in labels})
        if len(groups) < 2:
            raise WorkbenchError("grouped split requires at least 2 groups")
        order = rng.permutation(len(groups))
        test = []
        for gi in order:
            if len(test) >= n_test:
                break
            members = ids[np.array([str(v) for v in labels], dtype=object) == groups[gi]]
            test.extend(members.tolist())
        if len(test) >= n:
            raise WorkbenchError("grouped split left no training rows")
        strategy = f"grouped({group_by})"
    else:
        perm = rng.permutation(n)
        test = ids[perm[:n_test]].tolist()
        strategy = "shuffled"

    test_set = set(test)
    train = [rid for rid in ds.row_ids if rid not in test_set]
    return SplitIndices(
        train_ids=tuple(sorted(train)),
        test_ids=tuple(sorted(test_set)),
        seed=seed,
        strategy=f"{strategy}, test_fraction={test_fraction}",
    )

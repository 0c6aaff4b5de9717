"""Cross-validation fold generation.

All schemes partition the requested rows into k validation folds; the
training side of fold i is everything else. Stratified folds keep per-level
counts within one of each other, group folds never split a group across
the train/validation boundary.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import DTYPE_CONTINUOUS, ROLE_NON_INPUT, Dataset
from .errors import WorkbenchError

KFOLD = "kfold"
STRATIFIED = "stratified-kfold"
GROUP = "group-kfold"
LOGO = "leave-one-group-out"
SCHEME_KINDS = (KFOLD, STRATIFIED, GROUP, LOGO)

Fold = tuple[tuple[str, ...], tuple[str, ...]]  # (train_ids, val_ids)


@dataclass(frozen=True)
class CVScheme:
    kind: str = KFOLD
    k: int = 5
    stratify_column: str | None = None
    group_column: str | None = None
    seed: int | None = None

    def __post_init__(self):
        if self.kind not in SCHEME_KINDS:
            raise WorkbenchError(f"unknown cv scheme {self.kind!r}")
        if self.kind != LOGO and self.k < 2:
            raise WorkbenchError("cv requires k >= 2")
        if self.kind in (GROUP, LOGO) and not self.group_column:
            raise WorkbenchError(f"{self.kind} requires a group column")

    def to_doc(self) -> dict:
        doc: dict = {"kind": self.kind}
        if self.kind != LOGO:
            doc["k"] = self.k
        if self.stratify_column:
            doc["stratify_column"] = self.stratify_column
        if self.group_column:
            doc["group_column"] = self.group_column
        if self.seed is not None:
            doc["seed"] = self.seed
        return doc

    @staticmethod
    def from_doc(doc: dict) -> "CVScheme":
        return CVScheme(
            kind=doc.get("kind", KFOLD),
            k=doc.get("k", 5),
            stratify_column=doc.get("stratify_column"),
            group_column=doc.get("group_column"),
            seed=doc.get("seed"),
        )


def _column_labels(ds: Dataset, name: str, rows: list[str], purpose: str) -> list:
    col = ds.column(name)
    if purpose == "group" and col.role != ROLE_NON_INPUT:
        raise WorkbenchError(f"group column {name!r} must have the non-input role")
    if purpose == "stratify" and col.dtype == DTYPE_CONTINUOUS:
        raise WorkbenchError(f"stratify column {name!r} must be binary or categorical")
    pos = ds.positions(rows)
    if col.missing[pos].any():
        raise WorkbenchError(f"{purpose} column {name!r} has missing values in cv rows")
    return [col.values[p] for p in pos]


def _chunk_sizes(n: int, k: int) -> list[int]:
    base, extra = divmod(n, k)
    return [base + (1 if i < extra else 0) for i in range(k)]


def make_folds(ds: Dataset, rows, scheme: CVScheme) -> list[Fold]:
    rows = list(rows)
    known = set(ds.row_ids)
    for r in rows:
        if r not in known:
            raise WorkbenchError(f"unknown row id {r!r}")
    if len(set(rows)) != len(rows):
        raise WorkbenchError("cv rows contain duplicates")
    seed = scheme.seed if scheme.seed is not None else 0
    rng = np.random.default_rng(seed)

    if scheme.kind == KFOLD:
        buckets = _kfold(rows, scheme.k, rng)
    elif scheme.kind == STRATIFIED:
        name = scheme.stratify_column or _default_stratify(ds)
        labels = _column_labels(ds, name, rows, "stratify")
        buckets = _stratified(rows, labels, scheme.k, rng)
    elif scheme.kind == GROUP:
        labels = _column_labels(ds, scheme.group_column, rows, "group")
        buckets = _grouped(rows, labels, scheme.k, rng)
    else:
        labels = _column_labels(ds, scheme.group_column, rows, "group")
        buckets = _leave_one_group_out(rows, labels)

    folds: list[Fold] = []
    for i, val in enumerate(buckets):
        if not val:
            raise WorkbenchError(
                f"fold {i} is empty; reduce k or provide more rows"
            )
        val_set = set(val)
        train = tuple(sorted(r for r in rows if r not in val_set))
        folds.append((train, tuple(sorted(val))))
    return folds


def _default_stratify(ds: Dataset) -> str:
    targets = ds.columns_with_role("target")
    if len(targets) != 1:
        raise WorkbenchError(
            "stratified cv needs a stratify column or exactly one target"
        )
    return targets[0].name


def _kfold(rows, k, rng):
    if len(rows) < k:
        raise WorkbenchError(f"cannot make {k} folds from {len(rows)} rows")
    order = [rows[i] for i in rng.permutation(len(rows))]
    buckets, start = [], 0
    for size in _chunk_sizes(len(rows), k):
        buckets.append(order[start:start + size])
        start += size
    return buckets


def _stratified(rows, labels, k, rng):
    by_level: dict = {}
    for row, label in zip(rows, labels):
        by_level.setdefault(label, []).append(row)
    buckets = [[] for _ in range(k)]
    offset = 0
    for level in sorted(by_level):
        members = by_level[level]
        if len(members) < k:
            raise WorkbenchError(
                f"stratum {level!r} has {len(members)} rows, fewer than k={k}"
            )
        shuffled = [members[i] for i in rng.permutation(len(members))]
        for i, row in enumerate(shuffled):
            buckets[(offset + i) % k].append(row)
        offset = (offset + len(members)) % k
    return buckets


def _grouped(rows, labels, k, rng):
    by_group: dict = {}
    for row, label in zip(rows, labels):
        by_group.setdefault(label, []).append(row)
    groups = sorted(by_group)
    if len(groups) < k:
        raise WorkbenchError(
            f"group cv needs at least k={k} groups, found {len(groups)}"
        )
    shuffled = [groups[i] for i in rng.permutation(len(groups))]
    # largest groups first, then greedily into the lightest fold
    ordered = sorted(shuffled, key=lambda g: -len(by_group[g]))
    buckets = [[] for _ in range(k)]
    loads = [0] * k
    for g in ordered:
        i = loads.index(min(loads))
        buckets[i].extend(by_group[g])
        loads[i] += len(by_group[g])
    return buckets


def _leave_one_group_out(rows, labels):
    by_group: dict = {}
    for row, label in zip(rows, labels):
        by_group.setdefault(label, []).append(row)
    groups = sorted(by_group)
    if len(groups) < 2:
        raise WorkbenchError("leave-one-group-out needs at least two groups")
    return [by_group[g] for g in groups]

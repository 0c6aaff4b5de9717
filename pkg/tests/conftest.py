"""Shared fixtures: every dataset in the suite is built from a real CSV on
disk so tests exercise the same parsing path as users."""

import csv
import itertools
import random

import pytest

from tabwb.dataset import ROLE_NON_INPUT, ROLE_TARGET, load_csv, set_role


def write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    return path


@pytest.fixture
def make_dataset(tmp_path):
    """Build a Dataset from in-memory rows via a temp CSV.

    Cells are written with str(); pass target/non_input to assign roles.
    """
    counter = itertools.count()

    def build(header, rows, target=None, non_input=(), **load_kwargs):
        path = tmp_path / f"ds{next(counter)}.csv"
        write_csv(path, header, [[str(c) for c in row] for row in rows])
        ds = load_csv(path, **load_kwargs)
        if target is not None:
            ds = set_role(ds, target, ROLE_TARGET)
        for name in non_input:
            ds = set_role(ds, name, ROLE_NON_INPUT)
        return ds

    return build


def linear_rows(n, seed=0, noise=0.05):
    """y = 2*x1 - x2 + eps; the workhorse regression fixture."""
    rng = random.Random(seed)
    rows = []
    for _ in range(n):
        x1 = rng.uniform(-2.0, 2.0)
        x2 = rng.uniform(-2.0, 2.0)
        y = 2.0 * x1 - x2 + rng.gauss(0.0, noise)
        rows.append([f"{x1:.6f}", f"{x2:.6f}", f"{y:.6f}"])
    return ["x1", "x2", "y"], rows


def blobs_rows(n, seed=0, spread=0.4):
    """Two well-separated Gaussian blobs labelled neg/pos."""
    rng = random.Random(seed)
    rows = []
    for i in range(n):
        label = "pos" if i % 2 else "neg"
        center = 1.5 if label == "pos" else -1.5
        x1 = rng.gauss(center, spread)
        x2 = rng.gauss(-center, spread)
        rows.append([f"{x1:.6f}", f"{x2:.6f}", label])
    return ["x1", "x2", "label"], rows


@pytest.fixture
def linear_dataset(make_dataset):
    header, rows = linear_rows(40, seed=3)
    return make_dataset(header, rows, target="y")


@pytest.fixture
def blobs_dataset(make_dataset):
    header, rows = blobs_rows(40, seed=5)
    return make_dataset(header, rows, target="label")

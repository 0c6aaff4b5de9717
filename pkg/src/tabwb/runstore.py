"""Run records: fingerprints, content digests, and on-disk layout.

A run record is one JSON document carrying the verbatim config, the
effective seed, a dataset fingerprint, a phase log, and every report. The
record digest is computed over the canonical form with volatile fields
(timestamps, duration, the digest itself) removed, so identical runs have
byte-identical digests no matter when or where they executed. The run id
is a prefix of that digest, which makes the store content-addressed:
rerunning the same work lands on the same directory.
"""

from __future__ import annotations

import copy
import json
import time
from pathlib import Path

from . import __version__
from .canon import content_digest
from .dataset import Column, Dataset
from .errors import FingerprintMismatchError, WorkbenchError

RECORD_SCHEMA_VERSION = 1
RUN_ID_LENGTH = 16

PHASES = ("load", "split", "search", "fit", "score", "explain")
STATUS = ("done", "partial", "failed", "interrupted")

# fields that vary between byte-identical reruns
_VOLATILE = ("run_id", "digest", "created_at", "duration_s")


def _column_fingerprint(col: Column) -> str:
    observed = [None if m else v for v, m in zip(col.values.tolist(),
                                                 col.missing.tolist())]
    return content_digest({"dtype": col.dtype, "cells": observed})


def dataset_fingerprint(ds: Dataset) -> dict:
    """Schema plus per-column content hashes; roles are config, not data."""
    return {
        "n_rows": ds.n_rows,
        "columns": [
            {"name": c.name, "dtype": c.dtype, "hash": _column_fingerprint(c)}
            for c in ds.columns
        ],
    }


def fingerprint_diff(expected: dict, actual: dict) -> str:
    """Human-readable summary of what changed between two fingerprints."""
    parts = []
    if expected["n_rows"] != actual["n_rows"]:
        parts.append(f"row count {expected['n_rows']} -> {actual['n_rows']}")
    exp_cols = {c["name"]: c for c in expected["columns"]}
    act_cols = {c["name"]: c for c in actual["columns"]}
    for name in sorted(set(exp_cols) - set(act_cols)):
        parts.append(f"column {name!r} missing")
    for name in sorted(set(act_cols) - set(exp_cols)):
        parts.append(f"column {name!r} added")
    for name in sorted(set(exp_cols) & set(act_cols)):
        e, a = exp_cols[name], act_cols[name]
        if e["dtype"] != a["dtype"]:
            parts.append(f"column {name!r} dtype {e['dtype']} -> {a['dtype']}")
        elif e["hash"] != a["hash"]:
            parts.append(f"column {name!r} content changed")
    return "; ".join(parts) if parts else "fingerprints differ"


def check_fingerprint(expected: dict, ds: Dataset) -> None:
    actual = dataset_fingerprint(ds)
    if actual != expected:
        raise FingerprintMismatchError(
            f"dataset does not match the recorded fingerprint:"
            f" {fingerprint_diff(expected, actual)}"
        )


class RunLog:
    """Ordered phase log; timestamps are attached but excluded from digests."""

    def __init__(self):
        self.events: list[dict] = []
        self.t0 = time.time()

    def log(self, phase: str, message: str) -> None:
        if phase not in PHASES:
            raise WorkbenchError(f"unknown log phase {phase!r}")
        self.events.append({
            "seq": len(self.events),
            "phase": phase,
            "message": message,
            "ts": time.time(),
        })


def record_digest(record: dict) -> str:
    """Digest over the canonical record with volatile fields stripped."""
    doc = copy.deepcopy(record)
    for key in _VOLATILE:
        doc.pop(key, None)
    for event in doc.get("log", []):
        event.pop("ts", None)
    return content_digest(doc)


def seal_record(record: dict) -> dict:
    """Attach the content digest and derived run id."""
    digest = record_digest(record)
    record["digest"] = digest
    record["run_id"] = digest[:RUN_ID_LENGTH]
    return record


def new_record(config: dict, seed: int, dataset_path: str,
               fingerprint: dict) -> dict:
    return {
        "schema_version": RECORD_SCHEMA_VERSION,
        "tool": {"name": "tabwb", "version": __version__},
        "status": "done",
        "error": None,
        "config": config,
        "seed": seed,
        "dataset": {"path": dataset_path, "fingerprint": fingerprint},
        "split": None,
        "log": [],
        "reports": {"cv": None, "holdout": None, "importance": {}},
        "artifact_digests": {},
        "warnings": [],
    }


def write_record(record: dict, out_root) -> Path:
    if "run_id" not in record:
        raise WorkbenchError("record must be sealed before writing")
    run_dir = Path(out_root) / record["run_id"]
    run_dir.mkdir(parents=True, exist_ok=True)
    path = run_dir / "record.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(record, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def load_record(path) -> dict:
    p = Path(path)
    if p.is_dir():
        p = p / "record.json"
    if not p.exists():
        raise WorkbenchError(f"no run record at {p}")
    with open(p, encoding="utf-8") as fh:
        record = json.load(fh)
    if record.get("schema_version") != RECORD_SCHEMA_VERSION:
        raise WorkbenchError(
            f"record schema version {record.get('schema_version')!r}"
            f" is not supported (expected {RECORD_SCHEMA_VERSION})"
        )
    return record


def verify_record(record: dict) -> bool:
    """True when the stored digest matches the recomputed one."""
    return record.get("digest") == record_digest(record)


def list_runs(out_root) -> list[dict]:
    root = Path(out_root)
    if not root.exists():
        return []
    out = []
    for record_path in sorted(root.glob("*/record.json")):
        try:
            record = load_record(record_path)
        except (WorkbenchError, json.JSONDecodeError):
            continue
        out.append({
            "run_id": record.get("run_id"),
            "status": record.get("status"),
            "created_at": record.get("created_at"),
            "digest": record.get("digest"),
        })
    return out

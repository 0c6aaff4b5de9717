#!/usr/bin/env python3
"""Record HTTP fixtures for the frontend test suite.

Drives the real API in-process and dumps each response of interest as
{"method", "path", "status", "headers", "body"}. The vitest suites replay
these through a fake fetch, so they exercise real wire shapes without a
live server. Run from anywhere:

    python3 scripts/record_fixtures.py

Dataset CSVs are generated from seeded RNGs and dataset ids derive from
content, so re-recording rewrites the same dataset fixtures; run ids are
fresh each time, which is fine because tests read them from the fixtures.
"""

import json
import random
import sys
import tempfile
import threading
import time
from pathlib import Path

from fastapi.testclient import TestClient

import tabwb.api as apimod

FIXTURES = Path(__file__).resolve().parent.parent / "tests" / "fixtures"

TERMINAL = ("done", "failed", "interrupted")


def small_csv() -> str:
    """Twenty rows, three columns: continuous with gaps, categorical, target."""
    rng = random.Random(11)
    lines = ["v,c,y"]
    levels = ["a", "b", "a", "b", "c"]
    for i in range(20):
        v = "" if i in (3, 11) else f"{rng.gauss(10, 3):.4f}"
        y = f"{rng.gauss(0, 1):.4f}"
        lines.append(f"{v},{levels[i % len(levels)]},{y}")
    return "\n".join(lines) + "\n"


def wide_csv() -> str:
    """Eighty rows, twenty-six features: enough to overflow a top-twenty chart."""
    rng = random.Random(7)
    names = [f"f{i:02d}" for i in range(1, 27)]
    lines = [",".join(names + ["site", "y"])]
    sites = ["s1", "s2", "s3"]
    for i in range(80):
        xs = [rng.gauss(0, 1) for _ in range(26)]
        y = 2.0 * xs[0] - 1.5 * xs[1] + 0.8 * xs[2] + rng.gauss(0, 0.3)
        lines.append(",".join([f"{x:.4f}" for x in xs] + [sites[i % 3], f"{y:.4f}"]))
    return "\n".join(lines) + "\n"


def search_config(dataset_id: str) -> dict:
    """Mirror of the draft the builder test assembles; keep the two in sync."""
    return {
        "dataset": {"id": dataset_id},
        "roles": {"target": "y", "non_input": ["site"]},
        "pipeline": {
            "problem_type": "regression",
            "steps": [
                {"kind": "imputer", "estimator": "impute_mean", "params": {}},
                {"kind": "scaler", "estimator": "scaler_standard", "params": {}},
                {
                    "kind": "model",
                    "select": [
                        {
                            "kind": "model",
                            "estimator": "ridge",
                            "params": {
                                "alpha": {
                                    "dist": "float_range",
                                    "lo": 0.1,
                                    "hi": 10.0,
                                    "scale": "log",
                                }
                            },
                        },
                        {
                            "kind": "model",
                            "estimator": "knn",
                            "params": {
                                "k": {
                                    "dist": "int_range",
                                    "lo": 2,
                                    "hi": 10,
                                    "scale": "linear",
                                }
                            },
                        },
                    ],
                },
            ],
        },
        "cv": {"outer": {"kind": "kfold", "k": 5}, "inner": {"kind": "kfold", "k": 2}},
        "search": {"kind": "random", "budget": 4},
        "metrics": ["r2", "mae"],
        "objective_metric": "r2",
        "importance": {
            "methods": ["coef", "permutation", "permuted-target"],
            "rows": "train",
        },
        "stratify_report_by": "site",
        "seed": 7,
    }


def failing_config(dataset_id: str) -> dict:
    """Valid on paper, fails at runtime: five grouped folds over three sites."""
    return {
        "dataset": {"id": dataset_id},
        "roles": {"target": "y", "non_input": ["site"]},
        "pipeline": {
            "problem_type": "regression",
            "steps": [{"kind": "model", "estimator": "ridge", "params": {}}],
        },
        "cv": {"outer": {"kind": "group-kfold", "k": 5, "group_column": "site"}},
        "metrics": ["r2"],
        "seed": 3,
    }


def invalid_config() -> dict:
    return {
        "dataset": {},
        "roles": {"target": "y"},
        "pipeline": {"problem_type": "regression", "steps": []},
        "cv": {"outer": {"kind": "kfold", "k": 1}},
        "metrics": [],
        "seed": 0,
    }


def record(client: TestClient, method: str, path: str, **kw) -> dict:
    response = client.request(method, path, **kw)
    return {
        "method": method.upper(),
        "path": path,
        "status": response.status_code,
        "headers": {
            "content-type": response.headers.get("content-type", ""),
            "x-wb-schema": response.headers.get("x-wb-schema", ""),
        },
        "body": response.json(),
    }


def dump(name: str, doc) -> None:
    FIXTURES.joinpath(name).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    print(f"wrote {name}")


def wait_terminal(client: TestClient, run_id: str, timeout: float = 300.0) -> dict:
    deadline = time.time() + timeout
    while time.time() < deadline:
        body = client.get(f"/runs/{run_id}").json()
        if body["status"] in TERMINAL:
            return body
        time.sleep(0.2)
    raise RuntimeError(f"run {run_id} did not finish within {timeout}s")


def record_all(client: TestClient, gate: threading.Event) -> None:
    dump("health.json", record(client, "GET", "/health"))

    up_small = record(client, "POST", "/datasets", content=small_csv(),
                      headers={"Content-Type": "text/csv"})
    assert up_small["status"] == 201, up_small
    small_id = up_small["body"]["dataset_id"]
    dump("upload_small.json", up_small)

    up_wide = record(client, "POST", "/datasets", content=wide_csv(),
                     headers={"Content-Type": "text/csv"})
    assert up_wide["status"] == 201, up_wide
    wide_id = up_wide["body"]["dataset_id"]
    dump("upload_wide.json", up_wide)

    dump("upload_not_csv.json",
         record(client, "POST", "/datasets", content=b"{}",
                headers={"Content-Type": "application/json"}))

    roles_ok = record(client, "POST", f"/datasets/{small_id}/roles",
                      json={"target": "y", "non_input": []})
    assert roles_ok["status"] == 200, roles_ok
    dump("roles_small_ok.json", roles_ok)
    dump("roles_small_bad.json",
         record(client, "POST", f"/datasets/{small_id}/roles",
                json={"target": "nope", "non_input": []}))
    record(client, "POST", f"/datasets/{wide_id}/roles",
           json={"target": "y", "non_input": ["site"]})

    dump("datasets_list.json", record(client, "GET", "/datasets"))

    summary = record(client, "GET", f"/datasets/{small_id}/summary")
    assert summary["status"] == 200
    by_name = {c["name"]: c for c in summary["body"]["columns"]}
    assert by_name["v"]["histogram"] is not None, "continuous column lacks histogram"
    assert by_name["c"]["level_counts"], "categorical column lacks level counts"
    assert by_name["v"]["outliers"]["k"], "continuous column lacks outlier grid"
    dump("summary_small.json", summary)

    invalid = record(client, "POST", "/runs", json=invalid_config())
    assert invalid["status"] == 400, invalid
    paths = {e["path"] for e in invalid["body"]["errors"]}
    assert "cv.outer.k" in paths, paths
    dump("run_invalid.json", invalid)

    config = search_config(wide_id)
    dump("builder_config.json", config)
    accepted = record(client, "POST", "/runs", json=config)
    assert accepted["status"] == 202, accepted
    run_id = accepted["body"]["run_id"]
    dump("run_accepted.json", accepted)

    # worker threads are gated, so this snapshot is queued by construction
    queued = record(client, "GET", f"/runs/{run_id}")
    assert queued["body"]["status"] == "queued", queued["body"]["status"]
    dump("run_queued.json", queued)
    pending = record(client, "GET", f"/runs/{run_id}/report")
    assert pending["status"] == 404
    dump("report_pending.json", pending)

    failed_accept = record(client, "POST", "/runs", json=failing_config(wide_id))
    assert failed_accept["status"] == 202, failed_accept
    failed_id = failed_accept["body"]["run_id"]

    gate.set()
    wait_terminal(client, run_id)
    wait_terminal(client, failed_id)

    done = record(client, "GET", f"/runs/{run_id}")
    assert done["body"]["status"] == "done", done["body"]
    dump("run_done.json", done)

    report = record(client, "GET", f"/runs/{run_id}/report")
    body = report["body"]
    assert body["status"] == "done"
    assert len(body["reports"]["cv"]["folds"]) == 5
    assert body["reports"]["cv"]["stratified"]["column"] == "site"
    assert all(f["search"] is not None for f in body["reports"]["cv"]["folds"])
    dump("report_done.json", report)

    importance = record(client, "GET", f"/runs/{run_id}/importance")
    assert importance["status"] == 200
    methods = importance["body"]["importance"]
    assert len(methods["permutation"]["features"]) == 26
    assert methods["permuted-target"]["p_values"], "expected p-values"
    dump("importance_done.json", importance)

    failed = record(client, "GET", f"/runs/{failed_id}")
    assert failed["body"]["status"] == "failed", failed["body"]
    dump("run_failed.json", failed)
    failed_report = record(client, "GET", f"/runs/{failed_id}/report")
    assert failed_report["body"]["error"], failed_report["body"]
    assert failed_report["body"]["log"], "failed report carries no log"
    dump("report_failed.json", failed_report)

    imp_failed = record(client, "GET", f"/runs/{failed_id}/importance")
    assert imp_failed["status"] == 404, imp_failed
    dump("importance_failed.json", imp_failed)

    dump("runs_list.json", record(client, "GET", "/runs"))


def main() -> int:
    FIXTURES.mkdir(parents=True, exist_ok=True)

    # hold the queue workers until the queued-state fixtures are captured
    gate = threading.Event()
    original = apimod.JobManager._worker

    def gated(self):
        gate.wait()
        original(self)

    apimod.JobManager._worker = gated
    try:
        tmp = tempfile.mkdtemp(prefix="wb-fixtures-")
        app = apimod.create_app(runs_root=f"{tmp}/runs", data_root=f"{tmp}/datasets")
        with TestClient(app) as client:
            record_all(client, gate)
    finally:
        apimod.JobManager._worker = original
    return 0


if __name__ == "__main__":
    sys.exit(main())

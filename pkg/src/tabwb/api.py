"""HTTP API exposing datasets, runs, and reports.

Design notes:
- Every response carries `X-WB-Schema: 1` so clients can detect contract
  drift.
- Dataset uploads are content-addressed: the id is a prefix of the
  fingerprint digest, so re-uploading identical bytes lands on the same id.
- Runs execute on background worker threads with a job id distinct from
  the record's content-addressed run id; poll GET /runs/{id} for progress.
  Reports return 404 until the job reaches a terminal state.
"""

from __future__ import annotations

import json
import queue
import threading
import uuid
from contextlib import asynccontextmanager
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from . import __version__
from .canon import content_digest
from .config import validate_config
from .dataset import DTYPE_CONTINUOUS, detect_outliers, histogram, load_csv, \
    summarize
from .errors import ConfigError, ParseError, WorkbenchError
from .runstore import dataset_fingerprint, load_record
from .workflow import execute_run

SCHEMA_HEADER = "X-WB-Schema"
SCHEMA_VERSION = "1"


class DatasetStore:
    """Uploaded CSVs on disk plus per-dataset role metadata."""

    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def _csv_path(self, dataset_id: str) -> Path:
        return self.root / f"{dataset_id}.csv"

    def _meta_path(self, dataset_id: str) -> Path:
        return self.root / f"{dataset_id}.meta.json"

    def add(self, raw: bytes) -> dict:
        tmp = self.root / f"upload-{uuid.uuid4().hex}.csv"
        tmp.write_bytes(raw)
        try:
            ds = load_csv(tmp)
        except ParseError:
            tmp.unlink(missing_ok=True)
            raise
        fingerprint = dataset_fingerprint(ds)
        dataset_id = content_digest(fingerprint)[:16]
        with self._lock:
            final = self._csv_path(dataset_id)
            if not final.exists():
                tmp.replace(final)
            else:
                tmp.unlink()
            meta_path = self._meta_path(dataset_id)
            if not meta_path.exists():
                meta = {"dataset_id": dataset_id, "fingerprint": fingerprint,
                        "roles": {}}
                meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True))
        return {"dataset_id": dataset_id, "fingerprint": fingerprint,
                "n_rows": ds.n_rows, "n_columns": len(ds.columns)}

    def exists(self, dataset_id: str) -> bool:
        return self._csv_path(dataset_id).exists()

    def path(self, dataset_id: str) -> Path:
        p = self._csv_path(dataset_id)
        if not p.exists():
            raise KeyError(dataset_id)
        return p

    def meta(self, dataset_id: str) -> dict:
        p = self._meta_path(dataset_id)
        if not p.exists():
            raise KeyError(dataset_id)
        return json.loads(p.read_text())

    def set_roles(self, dataset_id: str, roles: dict) -> dict:
        with self._lock:
            meta = self.meta(dataset_id)
            meta["roles"] = roles
            self._meta_path(dataset_id).write_text(
                json.dumps(meta, indent=2, sort_keys=True))
        return meta

    def list(self) -> list[dict]:
        out = []
        for p in sorted(self.root.glob("*.meta.json")):
            out.append(json.loads(p.read_text()))
        return out


class JobState:
    def __init__(self, job_id: str, config: dict):
        self.job_id = job_id
        self.config = config
        self.status = "queued"
        self.progress = {"phase": None, "completed": 0, "total": None}
        self.record_id = None
        self.digest = None
        self.record_status = None
        self.error = None
        self.lock = threading.Lock()

    def snapshot(self) -> dict:
        with self.lock:
            return {
                "run_id": self.job_id,
                "status": self.status,
                "progress": dict(self.progress),
                "config": self.config,
                "record_id": self.record_id,
                "digest": self.digest,
                "record_status": self.record_status,
                "error": self.error,
            }


class JobManager:
    """FIFO queue of runs executed by daemon worker threads."""

    def __init__(self, runs_root, store: DatasetStore, workers: int = 1):
        self.runs_root = Path(runs_root)
        self.store = store
        self.jobs: dict[str, JobState] = {}
        self.order: list[str] = []
        self.queue: queue.Queue = queue.Queue()
        self.stop_event = threading.Event()
        self.lock = threading.Lock()
        self.threads = [
            threading.Thread(target=self._worker, daemon=True,
                             name=f"wb-worker-{i}")
            for i in range(max(1, workers))
        ]
        for t in self.threads:
            t.start()

    def submit(self, config: dict, dataset_path: str | None) -> JobState:
        job = JobState(uuid.uuid4().hex[:12], config)
        job.dataset_path = dataset_path
        with self.lock:
            self.jobs[job.job_id] = job
            self.order.append(job.job_id)
        self.queue.put(job.job_id)
        return job

    def get(self, job_id: str) -> JobState:
        with self.lock:
            return self.jobs[job_id]

    def list(self) -> list[dict]:
        with self.lock:
            return [self.jobs[j].snapshot() for j in self.order]

    def shutdown(self) -> None:
        self.stop_event.set()
        drained = True
        while drained:
            try:
                job_id = self.queue.get_nowait()
            except queue.Empty:
                drained = False
                continue
            job = self.get(job_id)
            with job.lock:
                job.status = "interrupted"
                job.error = "server shut down before the run started"

    def _worker(self) -> None:
        while not self.stop_event.is_set():
            try:
                job_id = self.queue.get(timeout=0.1)
            except queue.Empty:
                continue
            job = self.get(job_id)
            with job.lock:
                if job.status != "queued":
                    continue
                job.status = "running"

            def progress(phase, done, total):
                with job.lock:
                    job.progress = {"phase": phase, "completed": done,
                                    "total": total}

            try:
                record = execute_run(
                    job.config, self.runs_root,
                    dataset_path=job.dataset_path, progress=progress)
                with job.lock:
                    job.record_id = record["run_id"]
                    job.digest = record["digest"]
                    job.record_status = record["status"]
                    job.error = record.get("error")
                    job.status = "failed" if record["status"] == "failed" \
                        else "done"
            except (WorkbenchError, OSError) as e:
                with job.lock:
                    job.status = "failed"
                    job.error = str(e)


def create_app(runs_root="runs", data_root="datasets", workers: int = 1,
               ) -> FastAPI:
    store = DatasetStore(data_root)
    manager = JobManager(runs_root, store, workers)

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        yield
        manager.shutdown()

    app = FastAPI(title="tabwb", version=__version__, lifespan=lifespan)
    app.state.manager = manager
    app.state.store = store

    @app.middleware("http")
    async def schema_header(request: Request, call_next):
        response = await call_next(request)
        response.headers[SCHEMA_HEADER] = SCHEMA_VERSION
        return response

    def error(status: int, detail) -> JSONResponse:
        return JSONResponse({"detail": detail}, status_code=status)

    @app.get("/health")
    def health():
        return {"status": "ok", "version": __version__}

    @app.post("/datasets", status_code=201)
    async def upload_dataset(request: Request):
        content_type = request.headers.get("content-type", "")
        if "csv" not in content_type.lower():
            return error(415, "expected a text/csv request body")
        raw = await request.body()
        if not raw:
            return error(400, "empty upload")
        try:
            return store.add(raw)
        except ParseError as e:
            return error(400, str(e))

    @app.get("/datasets")
    def list_datasets():
        return store.list()

    @app.get("/datasets/{dataset_id}/summary")
    def dataset_summary(dataset_id: str):
        try:
            meta = store.meta(dataset_id)
            ds = load_csv(store.path(dataset_id))
        except KeyError:
            return error(404, f"no dataset {dataset_id!r}")
        roles = meta.get("roles", {})
        columns = []
        for col in ds.columns:
            stats = summarize(ds, col.name)
            role = "input-feature"
            if roles.get("target") == col.name:
                role = "target"
            elif col.name in (roles.get("non_input") or []):
                role = "non-input"
            entry = {"name": col.name, "dtype": col.dtype, "role": role,
                     **stats.to_doc(), "histogram": None, "outliers": None}
            if col.dtype == DTYPE_CONTINUOUS and stats.n > 0:
                edges, counts = histogram(ds, col.name)
                entry["histogram"] = {"edges": edges, "counts": counts}
                # counts at a fixed grid of std multipliers so clients can
                # show a threshold slider without recomputing statistics
                ks = [0.5, 1.0, 1.5, 2.0, 2.5, 3.0]
                entry["outliers"] = {
                    "k": ks,
                    "counts": [detect_outliers(ds, col.name, "std", k=k).n_flagged
                               for k in ks],
                }
            columns.append(entry)
        return {"dataset_id": dataset_id, "n_rows": ds.n_rows,
                "columns": columns}

    @app.post("/datasets/{dataset_id}/roles")
    def set_roles(dataset_id: str, roles: dict):
        try:
            ds = load_csv(store.path(dataset_id))
        except KeyError:
            return error(404, f"no dataset {dataset_id!r}")
        names = set(c.name for c in ds.columns)
        target = roles.get("target")
        non_input = roles.get("non_input") or []
        problems = []
        if target is not None and target not in names:
            problems.append(f"unknown target column {target!r}")
        for n in non_input:
            if n not in names:
                problems.append(f"unknown non-input column {n!r}")
        if target is not None and target in non_input:
            problems.append("target cannot also be non-input")
        if problems:
            return error(400, problems)
        meta = store.set_roles(dataset_id, {"target": target,
                                            "non_input": list(non_input)})
        return meta

    @app.post("/runs", status_code=202)
    def submit_run(config: dict):
        try:
            validate_config(config)
        except ConfigError as e:
            return JSONResponse(
                {"errors": [{"path": p, "message": m} for p, m in e.errors]},
                status_code=400)
        dataset_path = None
        dataset_id = config["dataset"].get("id")
        if dataset_id:
            try:
                dataset_path = str(store.path(dataset_id))
            except KeyError:
                return JSONResponse(
                    {"errors": [{"path": "dataset.id",
                                 "message": f"no dataset {dataset_id!r}"}]},
                    status_code=400)
        job = manager.submit(config, dataset_path)
        return {"run_id": job.job_id, "status": "queued"}

    @app.get("/runs")
    def list_runs_endpoint():
        return manager.list()

    @app.get("/runs/{job_id}")
    def run_state(job_id: str):
        try:
            return manager.get(job_id).snapshot()
        except KeyError:
            return error(404, f"no run {job_id!r}")

    def _finished_record(job_id: str):
        try:
            job = manager.get(job_id)
        except KeyError:
            return None, error(404, f"no run {job_id!r}")
        snap = job.snapshot()
        if snap["status"] not in ("done", "failed") or not snap["record_id"]:
            return None, error(404, "run has not finished yet")
        record = load_record(Path(manager.runs_root) / snap["record_id"])
        return record, None

    @app.get("/runs/{job_id}/report")
    def run_report(job_id: str):
        record, err = _finished_record(job_id)
        if err:
            return err
        return {"run_id": job_id, "record_id": record["run_id"],
                "digest": record["digest"], "status": record["status"],
                "seed": record["seed"], "split": record.get("split"),
                "reports": record["reports"],
                "warnings": record.get("warnings", []),
                "error": record.get("error"),
                "log": record.get("log", [])}

    @app.get("/runs/{job_id}/importance")
    def run_importance(job_id: str):
        record, err = _finished_record(job_id)
        if err:
            return err
        importance = record["reports"].get("importance") or {}
        if not importance:
            return error(404, "run has no importance reports")
        return {"run_id": job_id, "record_id": record["run_id"],
                "importance": importance}

    return app

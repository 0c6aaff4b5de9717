"""Command line interface.

Exit codes: 0 success, 2 usage/config/IO errors, 3 partial failure (failed
folds, replay mismatch, fingerprint mismatch). Every subcommand that prints
results accepts --json for machine-readable output; human output is plain
aligned text, no plotting.

The effective seed for `wb run` is resolved as: --seed flag, then the
config's seed, then the WB_SEED environment variable, then 0.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .dataset import global_split, load_csv, summarize
from .errors import (
    ConfigError,
    FingerprintMismatchError,
    ParseError,
    WorkbenchError,
)
from .runstore import load_record, list_runs
from .workflow import execute_run, replay_run

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PARTIAL = 3


def _print_json(doc) -> None:
    print(json.dumps(doc, indent=2, sort_keys=True))


def _parse_dtypes(pairs) -> dict:
    out = {}
    for pair in pairs or []:
        if "=" not in pair:
            raise WorkbenchError(f"--dtype expects col=kind, got {pair!r}")
        col, _, kind = pair.partition("=")
        out[col] = kind
    return out


def _load_csv_args(args):
    kwargs = {"dtype_overrides": _parse_dtypes(getattr(args, "dtype", None))}
    tokens = getattr(args, "missing_token", None)
    if tokens:
        kwargs["missing_tokens"] = frozenset(tokens)
    return load_csv(args.data, **kwargs)


def _fmt(value) -> str:
    if value is None:
        return "-"
    if isinstance(value, float):
        return f"{value:.4g}"
    return str(value)


def _table(headers, rows) -> str:
    widths = [len(h) for h in headers]
    cells = [[_fmt(c) for c in row] for row in rows]
    for row in cells:
        for i, c in enumerate(row):
            widths[i] = max(widths[i], len(c))
    lines = ["  ".join(h.ljust(w) for h, w in zip(headers, widths))]
    lines.append("  ".join("-" * w for w in widths))
    for row in cells:
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)))
    return "\n".join(lines)


def cmd_data_summary(args) -> int:
    ds = _load_csv_args(args)
    docs = {}
    rows = []
    for col in ds.columns:
        stats = summarize(ds, col.name)
        docs[col.name] = {"role": col.role, "dtype": col.dtype,
                          **stats.to_doc()}
        rows.append([col.name, col.dtype, stats.n, stats.n_missing,
                     stats.mean, stats.std, stats.min, stats.max,
                     stats.n_unique])
    if args.json:
        _print_json({"n_rows": ds.n_rows, "columns": docs})
    else:
        print(f"{args.data}: {ds.n_rows} rows, {len(ds.columns)} columns")
        print(_table(["column", "dtype", "n", "missing", "mean", "std",
                      "min", "max", "unique"], rows))
    return EXIT_OK


def cmd_data_split(args) -> int:
    ds = _load_csv_args(args)
    split = global_split(ds, args.test_fraction, stratify_by=args.stratify_by,
                         group_by=args.group_by, seed=args.seed)
    doc = split.to_doc()
    if args.out:
        Path(args.out).write_text(json.dumps(doc, indent=2, sort_keys=True)
                                  + "\n", encoding="utf-8")
    if args.json:
        _print_json(doc)
    else:
        print(f"split ({split.strategy}): {len(split.train_ids)} train,"
              f" {len(split.test_ids)} test, seed={split.seed}")
        if args.out:
            print(f"wrote {args.out}")
    return EXIT_OK


def _resolve_seed_override(args, config) -> int | None:
    if args.seed is not None:
        return args.seed
    if "seed" in config:
        return None  # config seed applies
    env = os.environ.get("WB_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise WorkbenchError(f"WB_SEED must be an integer, got {env!r}")
    return None


def _load_config(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise WorkbenchError(f"config file not found: {path}")
    except json.JSONDecodeError as e:
        raise WorkbenchError(f"config is not valid JSON: {e}")


def _print_report_summary(record) -> None:
    print(f"run {record['run_id']}  status={record['status']}"
          f"  seed={record['seed']}")
    cv = record["reports"].get("cv")
    if cv:
        rows = [[m, agg["mean"], agg["std"], agg["n_folds"]]
                for m, agg in sorted(cv["aggregate"].items())]
        print(_table(["metric", "mean", "std", "folds"], rows))
    holdout = record["reports"].get("holdout")
    if holdout:
        scores = holdout["folds"][0]["scores"]
        rows = [[m, v] for m, v in sorted(scores.items())]
        print("holdout:")
        print(_table(["metric", "score"], rows))
    for w in record.get("warnings", []):
        print(f"warning: {w}", file=sys.stderr)


def cmd_run(args) -> int:
    config = _load_config(args.config)
    seed_override = _resolve_seed_override(args, config)
    record = execute_run(config, args.out, seed_override=seed_override,
                         jobs=args.jobs)
    if args.json:
        _print_json({"run_id": record["run_id"], "digest": record["digest"],
                     "status": record["status"],
                     "record": str(Path(args.out) / record["run_id"]
                                   / "record.json")})
    else:
        _print_report_summary(record)
        print(f"record: {Path(args.out) / record['run_id'] / 'record.json'}")
    if record["status"] == "done":
        return EXIT_OK
    print(f"run finished with status {record['status']}:"
          f" {record.get('error') or 'see warnings'}", file=sys.stderr)
    return EXIT_PARTIAL


def cmd_report(args) -> int:
    record = load_record(args.run)
    if args.json:
        _print_json(record["reports"])
        return EXIT_OK
    _print_report_summary(record)
    cv = record["reports"].get("cv")
    if cv:
        print("folds:")
        metric_ids = cv["metrics"]
        rows = []
        for f in cv["folds"]:
            rows.append([f["fold"], f["train_size"], f["val_size"],
                         *[f["scores"].get(m) for m in metric_ids],
                         "failed" if f.get("failed") else "ok"])
        print(_table(["fold", "train", "val", *metric_ids, "state"], rows))
        strat = cv.get("stratified")
        if strat:
            print(f"stratified by {strat['column']}:")
            rows = [[g["group"], g["n"],
                     *[g["scores"].get(m) for m in metric_ids]]
                    for g in strat["groups"]]
            print(_table(["group", "n", *metric_ids], rows))
    return EXIT_OK


def cmd_importance(args) -> int:
    record = load_record(args.run)
    reports = record["reports"].get("importance") or {}
    if not reports:
        print("no importance reports in this run", file=sys.stderr)
        return EXIT_USAGE
    if args.json:
        _print_json(reports)
        return EXIT_OK
    for method, doc in sorted(reports.items()):
        if args.method and method != args.method:
            continue
        print(f"[{method}]")
        values = doc["values"]
        if values and isinstance(values[0], list):
            values = [sum(abs(v) for v in col) / len(col)
                      for col in zip(*values)]  # mean |coef| across classes
        pairs = list(zip(doc["features"], values))
        pairs.sort(key=lambda p: -abs(p[1]))
        if args.top:
            pairs = pairs[:args.top]
        p_values = dict(zip(doc["features"], doc.get("p_values") or []))
        rows = [[name, value, p_values.get(name)] for name, value in pairs]
        headers = ["feature", "value"] + (["p"] if p_values else [""])
        print(_table(headers, [r if p_values else r[:2] for r in rows]))
    return EXIT_OK


def cmd_replay(args) -> int:
    old, new, match = replay_run(args.run, out_root=args.out, jobs=args.jobs)
    doc = {"run_id": old["run_id"], "old_digest": old["digest"],
           "new_digest": new["digest"], "match": match}
    if args.json:
        _print_json(doc)
    else:
        state = "digests match" if match else "DIGESTS DIFFER"
        print(f"replay of {old['run_id']}: {state}")
        if not match:
            print(f"  recorded: {old['digest']}\n  fresh:    {new['digest']}")
    return EXIT_OK if match else EXIT_PARTIAL


def cmd_runs(args) -> int:
    runs = list_runs(args.runs_dir)
    if args.json:
        _print_json(runs)
    else:
        rows = [[r["run_id"], r["status"], r["created_at"]] for r in runs]
        print(_table(["run_id", "status", "created_at"], rows))
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .api import create_app

    app = create_app(runs_root=args.runs_dir, data_root=args.data_dir,
                     workers=args.workers)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wb",
        description="Leakage-safe predictive modeling workbench for tabular data",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    data = sub.add_parser("data", help="dataset inspection and splitting")
    data_sub = data.add_subparsers(dest="data_command", required=True)

    p = data_sub.add_parser("summary", help="per-column summary statistics")
    p.add_argument("data", help="CSV file")
    p.add_argument("--dtype", action="append", metavar="COL=KIND",
                   help="override inferred dtype (repeatable)")
    p.add_argument("--missing-token", action="append",
                   help="treat this token as missing (repeatable)")
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=cmd_data_summary)

    p = data_sub.add_parser("split", help="global train/test split")
    p.add_argument("data", help="CSV file")
    p.add_argument("--test-fraction", type=float, required=True)
    p.add_argument("--stratify-by")
    p.add_argument("--group-by")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dtype", action="append", metavar="COL=KIND")
    p.add_argument("--missing-token", action="append")
    p.add_argument("--out", help="write the split document to this file")
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=cmd_data_split)

    p = sub.add_parser("run", help="execute a run config")
    p.add_argument("config", help="RunConfig JSON file")
    p.add_argument("--out", required=True, help="runs directory")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("report", help="show a stored run's reports")
    p.add_argument("run", help="run directory or record.json")
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=cmd_report)

    p = sub.add_parser("importance", help="show stored importance reports")
    p.add_argument("run", help="run directory or record.json")
    p.add_argument("--method", help="show one method only")
    p.add_argument("--top", type=int, help="show the top N features")
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=cmd_importance)

    p = sub.add_parser("replay", help="re-execute a run and compare digests")
    p.add_argument("run", help="run directory or record.json")
    p.add_argument("--out", help="write the fresh record to this runs directory")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=cmd_replay)

    p = sub.add_parser("runs", help="list stored runs")
    p.add_argument("runs_dir", help="runs directory")
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=cmd_runs)

    p = sub.add_parser("serve", help="start the HTTP API")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8720)
    p.add_argument("--runs-dir", default="runs")
    p.add_argument("--data-dir", default="datasets")
    p.add_argument("--workers", type=int, default=1,
                   help="background execution threads")
    p.set_defaults(fn=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as e:
        for path, msg in e.errors:
            where = f"{path}: " if path else ""
            print(f"config error: {where}{msg}", file=sys.stderr)
        return EXIT_USAGE
    except FingerprintMismatchError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PARTIAL
    except (ParseError, WorkbenchError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

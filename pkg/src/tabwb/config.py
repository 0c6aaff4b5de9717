"""Run configuration: JSON schema validation and domain-object builders.

A RunConfig is one JSON document describing dataset, roles, optional
holdout split, pipeline, cross-validation, optional search, metrics, and
optional importance requests. Validation reports every problem at once
with dotted key paths, so a config with three mistakes needs one fix
round, not three.
"""

from __future__ import annotations

import jsonschema

from .errors import ConfigError
from .folds import CVScheme
from .pipeline import PipelineSpec, spec_from_doc, validate as validate_spec
from .search import SearchStrategy

_SCHEME_SCHEMA = {
    "type": "object",
    "properties": {
        "kind": {"enum": ["kfold", "stratified-kfold", "group-kfold",
                          "leave-one-group-out"]},
        "k": {"type": "integer", "minimum": 2},
        "stratify_column": {"type": ["string", "null"]},
        "group_column": {"type": ["string", "null"]},
        "seed": {"type": ["integer", "null"]},
    },
    "additionalProperties": False,
}

_DIST_SCHEMA = {
    "oneOf": [
        {"not": {"type": "object"}},
        {
            "type": "object",
            "required": ["dist"],
            "properties": {
                "dist": {"enum": ["fixed", "choice", "int_range", "float_range"]},
                "value": {},
                "values": {"type": "array", "minItems": 1},
                "lo": {"type": "number"},
                "hi": {"type": "number"},
                "scale": {"enum": ["linear", "log"]},
            },
            "additionalProperties": False,
        },
    ]
}

_STEP_SCHEMA = {
    "type": "object",
    "properties": {
        "kind": {"enum": ["imputer", "encoder", "scaler", "selector", "model"]},
        "estimator": {"type": "string"},
        "params": {"type": "object",
                   "additionalProperties": _DIST_SCHEMA},
        "select": {"type": "array", "minItems": 1,
                   "items": {"$ref": "#/$defs/step"}},
        "applies_to": {"enum": ["all-input", "continuous-only",
                                "categorical-only"]},
    },
    "required": ["kind"],
    "additionalProperties": False,
}

RUN_CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "$defs": {"step": _STEP_SCHEMA},
    "type": "object",
    "required": ["dataset", "roles", "pipeline", "cv", "metrics"],
    "properties": {
        "dataset": {
            "type": "object",
            "properties": {
                "path": {"type": "string"},
                "id": {"type": "string"},
                "dtypes": {"type": "object",
                           "additionalProperties": {
                               "enum": ["continuous", "binary", "categorical"]}},
                "missing_tokens": {"type": "array",
                                   "items": {"type": "string"}},
            },
            "additionalProperties": False,
        },
        "roles": {
            "type": "object",
            "required": ["target"],
            "properties": {
                "target": {"type": "string"},
                "non_input": {"type": "array", "items": {"type": "string"}},
            },
            "additionalProperties": False,
        },
        "split": {
            "type": ["object", "null"],
            "properties": {
                "test_fraction": {"type": "number",
                                  "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "stratify_by": {"type": ["string", "null"]},
                "group_by": {"type": ["string", "null"]},
                "seed": {"type": ["integer", "null"]},
            },
            "required": ["test_fraction"],
            "additionalProperties": False,
        },
        "pipeline": {
            "type": "object",
            "required": ["problem_type", "steps"],
            "properties": {
                "problem_type": {"enum": ["regression", "binary", "categorical"]},
                "steps": {"type": "array", "minItems": 1,
                          "items": {"$ref": "#/$defs/step"}},
            },
            "additionalProperties": False,
        },
        "cv": {
            "type": "object",
            "required": ["outer"],
            "properties": {
                "outer": _SCHEME_SCHEMA,
                "inner": _SCHEME_SCHEMA,
            },
            "additionalProperties": False,
        },
        "search": {
            "type": ["object", "null"],
            "properties": {
                "kind": {"enum": ["random", "evolutionary"]},
                "budget": {"type": "integer", "minimum": 1},
                "seed": {"type": ["integer", "null"]},
                "mu": {"type": "integer", "minimum": 1},
                "lam": {"type": "integer", "minimum": 1},
                "mutation_scale": {"type": "number",
                                   "exclusiveMinimum": 0, "maximum": 1},
            },
            "additionalProperties": False,
        },
        "metrics": {"type": "array", "minItems": 1,
                    "items": {"type": "string"}},
        "objective_metric": {"type": ["string", "null"]},
        "importance": {
            "type": ["object", "null"],
            "required": ["methods", "rows"],
            "properties": {
                "methods": {"type": "array", "minItems": 1,
                            "items": {"enum": ["coef", "permutation",
                                               "permuted-target", "shapley"]}},
                "rows": {"enum": ["train", "test"]},
                "metric": {"type": ["string", "null"]},
                "n_repeats": {"type": "integer", "minimum": 1},
                "n_permutations": {"type": "integer", "minimum": 1},
                "shapley": {
                    "type": "object",
                    "properties": {
                        "mode": {"enum": ["exact", "sampled"]},
                        "n_coalitions": {"type": "integer", "minimum": 1},
                        "n_instances": {"type": "integer", "minimum": 1},
                        "background_size": {"type": "integer", "minimum": 1},
                    },
                    "additionalProperties": False,
                },
            },
            "additionalProperties": False,
        },
        "stratify_report_by": {"type": ["string", "null"]},
        "subset": {
            "type": ["object", "null"],
            "required": ["column", "level"],
            "properties": {
                "column": {"type": "string"},
                "level": {"type": "string"},
            },
            "additionalProperties": False,
        },
        "seed": {"type": "integer"},
    },
    "additionalProperties": False,
}


def _dotted(path) -> str:
    parts = []
    for p in path:
        if isinstance(p, int):
            if parts:
                parts[-1] = f"{parts[-1]}[{p}]"
            else:
                parts.append(f"[{p}]")
        else:
            parts.append(str(p))
    return ".".join(parts)


def validate_config(config) -> None:
    """Validate a RunConfig document; raises ConfigError listing all problems."""
    if not isinstance(config, dict):
        raise ConfigError([("", "configuration must be a JSON object")])
    validator = jsonschema.Draft202012Validator(RUN_CONFIG_SCHEMA)
    errors = []
    for e in sorted(validator.iter_errors(config), key=lambda e: list(e.absolute_path)):
        if e.validator == "oneOf":  # dig into dist sub-errors for a usable message
            message = "not a valid parameter distribution"
        else:
            message = e.message
        errors.append((_dotted(e.absolute_path), message))
    if errors:
        raise ConfigError(errors)

    semantic = []
    ds = config["dataset"]
    if not ds.get("path") and not ds.get("id"):
        semantic.append(("dataset", "either path or id is required"))
    from .metrics import METRICS
    for i, m in enumerate(config["metrics"]):
        if m not in METRICS:
            semantic.append((f"metrics[{i}]", f"unknown metric {m!r}"))
    if config.get("search"):
        if "inner" not in config["cv"]:
            semantic.append(("cv.inner", "search requires an inner cv scheme"))
        objective = config.get("objective_metric")
        if not objective:
            semantic.append(("objective_metric", "search requires an objective metric"))
        elif objective not in METRICS:
            semantic.append(("objective_metric", f"unknown metric {objective!r}"))
        elif objective not in config["metrics"]:
            semantic.append(("objective_metric",
                             "objective metric must be listed in metrics"))
    imp = config.get("importance")
    if imp:
        if imp["rows"] == "test" and not config.get("split"):
            semantic.append(("importance.rows",
                             "rows='test' requires a holdout split"))
        if imp.get("metric") and imp["metric"] not in METRICS:
            semantic.append(("importance.metric",
                             f"unknown metric {imp['metric']!r}"))
    try:
        spec = spec_from_doc(config["pipeline"])
        report = validate_spec(spec)
        for step, msg in report.entries:
            where = "pipeline" if step is None else f"pipeline.steps[{step}]"
            semantic.append((where, msg))
    except (KeyError, ValueError, TypeError) as e:
        semantic.append(("pipeline", str(e)))
    if semantic:
        raise ConfigError(semantic)


def pipeline_from_config(config) -> PipelineSpec:
    return spec_from_doc(config["pipeline"])


def outer_scheme(config) -> CVScheme:
    return CVScheme.from_doc(config["cv"]["outer"])


def inner_scheme(config) -> CVScheme | None:
    doc = config["cv"].get("inner")
    return CVScheme.from_doc(doc) if doc else None


def search_strategy(config) -> SearchStrategy | None:
    doc = config.get("search")
    return SearchStrategy.from_doc(doc) if doc else None

"""Pipeline specifications and their hyperparameter search space.

A PipelineSpec is an ordered list of steps ending in a model. Each step
names either a single estimator or a Select over alternative step specs,
which makes the estimator identity itself a categorical hyperparameter.
Parameters are distributions (see params); a concrete draw is a
ParamConfig, and bind() resolves spec + config into a BoundPipeline ready
to fit.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .canon import canonical_json
from .errors import BindingError, WorkbenchError
from .estimators import (
    MODEL,
    REGISTRY,
    SCOPES,
    STEP_KINDS,
    TASK_BINARY,
    TASK_CATEGORICAL,
    TASK_REGRESSION,
    get_info,
)
from .params import dist_from_doc

PROBLEM_TYPES = (TASK_REGRESSION, TASK_BINARY, TASK_CATEGORICAL)

# canonical step order within a pipeline
_KIND_ORDER = {kind: i for i, kind in enumerate(STEP_KINDS)}


@dataclass(frozen=True)
class Select:
    """Alternative step specs competing for one pipeline slot."""

    alternatives: tuple["StepSpec", ...]

    def __init__(self, alternatives):
        object.__setattr__(self, "alternatives", tuple(alternatives))


@dataclass(frozen=True)
class StepSpec:
    kind: str
    estimator: Union[str, Select]
    params: dict = field(default_factory=dict)
    applies_to: str | None = None

    def scope(self) -> str:
        if self.applies_to is not None:
            return self.applies_to
        first = flatten_alternatives(self)[0]
        return get_info(first.estimator).default_scope


@dataclass(frozen=True)
class PipelineSpec:
    steps: tuple[StepSpec, ...]
    problem_type: str

    def __init__(self, steps, problem_type):
        object.__setattr__(self, "steps", tuple(steps))
        object.__setattr__(self, "problem_type", problem_type)


def flatten_alternatives(step: StepSpec) -> list[StepSpec]:
    """All concrete (non-Select) step specs reachable from one slot."""
    if isinstance(step.estimator, str):
        return [step]
    out = []
    for alt in step.estimator.alternatives:
        out.extend(flatten_alternatives(alt))
    return out


@dataclass(frozen=True)
class ValidationReport:
    entries: tuple[tuple[int | None, str], ...]

    @property
    def ok(self) -> bool:
        return not self.entries

    def __str__(self) -> str:
        if self.ok:
            return "pipeline spec is valid"
        lines = []
        for step, msg in self.entries:
            where = f"step {step}: " if step is not None else ""
            lines.append(f"{where}{msg}")
        return "\n".join(lines)

    def raise_if_invalid(self) -> None:
        if not self.ok:
            raise WorkbenchError(f"invalid pipeline spec:\n{self}")


def _validate_concrete(step: StepSpec, index: int, problem_type: str, out: list):
    if not isinstance(step.estimator, str):
        raise AssertionError("expected concrete step")
    if step.estimator not in REGISTRY:
        out.append((index, f"unknown estimator {step.estimator!r}"))
        return
    info = get_info(step.estimator)
    if info.kind != step.kind:
        out.append((index, f"{step.estimator!r} is a {info.kind}, step says {step.kind!r}"))
    for name, dist in step.params.items():
        if name not in info.param_names:
            out.append((index, f"{step.estimator}: unknown parameter {name!r}"))
        for issue in dist.issues():
            out.append((index, f"{step.estimator}.{name}: {issue}"))
    if step.kind == MODEL and problem_type not in info.tasks:
        out.append((index, f"{step.estimator!r} does not support {problem_type!r} targets"))


def _validate_step(step: StepSpec, index: int, problem_type: str, out: list):
    if step.kind not in STEP_KINDS:
        out.append((index, f"unknown step kind {step.kind!r}"))
        return
    if step.applies_to is not None and step.applies_to not in SCOPES:
        out.append((index, f"unknown scope {step.applies_to!r}"))
    if isinstance(step.estimator, Select):
        if not step.estimator.alternatives:
            out.append((index, "Select has no alternatives"))
            return
        for alt in step.estimator.alternatives:
            if alt.kind != step.kind:
                out.append((index, f"Select alternative {describe(alt)} has kind"
                                   f" {alt.kind!r}, slot expects {step.kind!r}"))
            _validate_step(alt, index, problem_type, out)
    else:
        _validate_concrete(step, index, problem_type, out)


def describe(step: StepSpec) -> str:
    if isinstance(step.estimator, str):
        return step.estimator
    return "select(" + ", ".join(describe(a) for a in step.estimator.alternatives) + ")"


def validate(spec: PipelineSpec) -> ValidationReport:
    out: list[tuple[int | None, str]] = []
    if spec.problem_type not in PROBLEM_TYPES:
        out.append((None, f"unknown problem type {spec.problem_type!r}"))
    if not spec.steps:
        out.append((None, "pipeline has no steps"))
        return ValidationReport(tuple(out))
    model_positions = [i for i, s in enumerate(spec.steps) if s.kind == MODEL]
    if len(model_positions) != 1 or model_positions[0] != len(spec.steps) - 1:
        out.append((None, "pipeline must end with exactly one model step"))
    kinds = [s.kind for s in spec.steps if s.kind in _KIND_ORDER]
    ranks = [_KIND_ORDER[k] for k in kinds]
    if ranks != sorted(ranks):
        out.append((None, "steps must follow imputer, encoder, scaler, selector, model order"))
    seen: dict[str, int] = {}
    for i, step in enumerate(spec.steps):
        if step.kind in seen and step.kind != MODEL:
            out.append((i, f"duplicate {step.kind} step (first at {seen[step.kind]})"))
        seen.setdefault(step.kind, i)
        _validate_step(step, i, spec.problem_type, out)
    return ValidationReport(tuple(out))


def _step_cardinality(step: StepSpec):
    if isinstance(step.estimator, Select):
        total = 0
        for alt in step.estimator.alternatives:
            c = _step_cardinality(alt)
            if c is None:
                return None
            total += c
        return total
    card = 1
    for dist in step.params.values():
        c = dist.cardinality()
        if c is None:
            return None
        card *= c
    return card


def space_cardinality(spec: PipelineSpec) -> float:
    """Number of distinct configurations; math.inf when any range is present."""
    total = 1
    for step in spec.steps:
        c = _step_cardinality(step)
        if c is None:
            return math.inf
        total *= c
    return total


@dataclass(frozen=True)
class StepConfig:
    estimator_id: str
    params: dict

    def to_doc(self) -> dict:
        return {"estimator": self.estimator_id, "params": dict(self.params)}


@dataclass(frozen=True)
class ParamConfig:
    steps: tuple[StepConfig, ...]

    def __init__(self, steps):
        object.__setattr__(self, "steps", tuple(steps))

    def to_doc(self) -> list:
        return [s.to_doc() for s in self.steps]

    def key(self) -> str:
        """Canonical identity used for deduplication."""
        return canonical_json(self.to_doc())


def _sample_step(step: StepSpec, rng: np.random.Generator) -> StepConfig:
    if isinstance(step.estimator, Select):
        alts = step.estimator.alternatives
        pick = alts[int(rng.integers(len(alts)))]
        return _sample_step(pick, rng)
    params = {name: step.params[name].sample(rng) for name in sorted(step.params)}
    return StepConfig(step.estimator, params)


def sample(spec: PipelineSpec, seed: int) -> ParamConfig:
    rng = np.random.default_rng(seed)
    return ParamConfig(tuple(_sample_step(s, rng) for s in spec.steps))


def _mutate_step(step: StepSpec, current: StepConfig, rng: np.random.Generator,
                 scale: float) -> StepConfig:
    if isinstance(step.estimator, Select):
        if rng.random() < scale:
            return _sample_step(step, rng)
        for alt in flatten_alternatives(step):
            if alt.estimator == current.estimator_id:
                return _mutate_step(alt, current, rng, scale)
        return _sample_step(step, rng)
    params = {}
    for name in sorted(step.params):
        params[name] = step.params[name].mutate(current.params[name], rng, scale)
    return StepConfig(step.estimator, params)


def mutate_config(spec: PipelineSpec, config: ParamConfig,
                  rng: np.random.Generator, scale: float) -> ParamConfig:
    """Gaussian step in scale space for ranges; re-draw choices with prob scale."""
    return ParamConfig(tuple(
        _mutate_step(step, cur, rng, scale)
        for step, cur in zip(spec.steps, config.steps)
    ))


def _enumerate_step(step: StepSpec) -> list[StepConfig]:
    if isinstance(step.estimator, Select):
        out = []
        for alt in step.estimator.alternatives:
            out.extend(_enumerate_step(alt))
        return out
    names = sorted(step.params)
    pools = [step.params[n].enumerate() for n in names]
    return [StepConfig(step.estimator, dict(zip(names, combo)))
            for combo in itertools.product(*pools)]


def enumerate_configs(spec: PipelineSpec) -> list[ParamConfig]:
    if math.isinf(space_cardinality(spec)):
        raise WorkbenchError("cannot enumerate an infinite search space")
    per_step = [_enumerate_step(s) for s in spec.steps]
    return [ParamConfig(combo) for combo in itertools.product(*per_step)]


@dataclass(frozen=True)
class BoundStep:
    kind: str
    estimator_id: str
    params: dict
    scope: str


@dataclass(frozen=True)
class BoundPipeline:
    steps: tuple[BoundStep, ...]
    problem_type: str

    @property
    def model(self) -> BoundStep:
        return self.steps[-1]


def _bind_step(step: StepSpec, config: StepConfig, index: int) -> BoundStep:
    candidates = flatten_alternatives(step)
    match = next((c for c in candidates if c.estimator == config.estimator_id), None)
    if match is None:
        names = ", ".join(c.estimator for c in candidates)
        raise BindingError(
            f"step {index}: config names {config.estimator_id!r},"
            f" spec allows {names}"
        )
    expected = set(match.params)
    got = set(config.params)
    if expected != got:
        missing = expected - got
        extra = got - expected
        parts = []
        if missing:
            parts.append(f"missing {sorted(missing)}")
        if extra:
            parts.append(f"unexpected {sorted(extra)}")
        raise BindingError(f"step {index} ({config.estimator_id}): {'; '.join(parts)}")
    for name, dist in match.params.items():
        if not dist.contains(config.params[name]):
            raise BindingError(
                f"step {index} ({config.estimator_id}): value"
                f" {config.params[name]!r} for {name!r} is outside its distribution"
            )
    return BoundStep(match.kind, match.estimator, dict(config.params), match.scope())


def bind(spec: PipelineSpec, config: ParamConfig) -> BoundPipeline:
    if len(config.steps) != len(spec.steps):
        raise BindingError(
            f"config has {len(config.steps)} steps, spec has {len(spec.steps)}"
        )
    return BoundPipeline(
        tuple(_bind_step(s, c, i)
              for i, (s, c) in enumerate(zip(spec.steps, config.steps))),
        spec.problem_type,
    )


def fixed_config(spec: PipelineSpec) -> ParamConfig:
    """The unique config of a fully pinned spec (cardinality one)."""
    if space_cardinality(spec) != 1:
        raise WorkbenchError(
            "pipeline has open hyperparameters; pin them or run a search"
        )
    return enumerate_configs(spec)[0]


def step_to_doc(step: StepSpec) -> dict:
    doc: dict = {"kind": step.kind}
    if isinstance(step.estimator, Select):
        doc["select"] = [step_to_doc(a) for a in step.estimator.alternatives]
    else:
        doc["estimator"] = step.estimator
        doc["params"] = {k: d.to_doc() for k, d in step.params.items()}
    if step.applies_to is not None:
        doc["applies_to"] = step.applies_to
    return doc


def step_from_doc(doc: dict) -> StepSpec:
    kind = doc.get("kind")
    applies_to = doc.get("applies_to")
    if "select" in doc:
        alts = tuple(step_from_doc(d) for d in doc["select"])
        return StepSpec(kind, Select(alts), {}, applies_to)
    params = {k: dist_from_doc(v) for k, v in (doc.get("params") or {}).items()}
    return StepSpec(kind, doc.get("estimator"), params, applies_to)


def spec_to_doc(spec: PipelineSpec) -> dict:
    return {
        "problem_type": spec.problem_type,
        "steps": [step_to_doc(s) for s in spec.steps],
    }


def spec_from_doc(doc: dict) -> PipelineSpec:
    return PipelineSpec(
        tuple(step_from_doc(d) for d in doc.get("steps", [])),
        doc.get("problem_type"),
    )


def preset_step(estimator_id: str, kind: str | None = None,
                applies_to: str | None = None) -> StepSpec:
    """Step spec carrying the estimator's stock search distributions."""
    info = get_info(estimator_id)
    return StepSpec(kind or info.kind, estimator_id, dict(info.preset), applies_to)

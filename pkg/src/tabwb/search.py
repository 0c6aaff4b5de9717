"""Hyperparameter search over pipeline spaces.

Two strategies: random draws (deduplicated enumeration when the space is
finite, so a large enough budget is exhaustive) and a (mu + lambda)
evolution loop mutating survivors. Every candidate evaluation lands in the
trace in evaluation order, failures included; the best entry is the first
one reaching the best value, so reruns with one seed are reproducible
decision for decision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .canon import derive_seed
from .errors import WorkbenchError
from .metrics import HIGHER, LOWER
from .pipeline import (
    ParamConfig,
    PipelineSpec,
    enumerate_configs,
    mutate_config,
    sample,
    space_cardinality,
)

RANDOM = "random"
EVOLUTIONARY = "evolutionary"


@dataclass(frozen=True)
class SearchStrategy:
    kind: str = RANDOM
    budget: int = 16
    seed: int | None = None
    # evolutionary knobs
    mu: int = 4
    lam: int = 8
    mutation_scale: float = 0.1

    def __post_init__(self):
        if self.kind not in (RANDOM, EVOLUTIONARY):
            raise WorkbenchError(f"unknown search strategy {self.kind!r}")
        if self.budget < 1:
            raise WorkbenchError("search budget must be >= 1")
        if self.kind == EVOLUTIONARY:
            if self.mu < 1 or self.lam < 1:
                raise WorkbenchError(
                    "evolutionary search needs mu >= 1 and lambda >= 1")
            if not (0.0 < self.mutation_scale <= 1.0):
                raise WorkbenchError("mutation_scale must be in (0, 1]")

    def to_doc(self) -> dict:
        doc = {"kind": self.kind, "budget": self.budget}
        if self.seed is not None:
            doc["seed"] = self.seed
        if self.kind == EVOLUTIONARY:
            doc.update({"mu": self.mu, "lam": self.lam,
                        "mutation_scale": self.mutation_scale})
        return doc

    @staticmethod
    def from_doc(doc: dict) -> "SearchStrategy":
        return SearchStrategy(
            kind=doc.get("kind", RANDOM),
            budget=doc.get("budget", 16),
            seed=doc.get("seed"),
            mu=doc.get("mu", 4),
            lam=doc.get("lam", 8),
            mutation_scale=doc.get("mutation_scale", 0.1),
        )


@dataclass(frozen=True)
class TraceEntry:
    index: int
    config: ParamConfig
    value: float | None
    failed: bool = False
    error: str | None = None

    def to_doc(self) -> dict:
        doc = {"index": self.index, "config": self.config.to_doc(),
               "value": self.value}
        if self.failed:
            doc["failed"] = True
            doc["error"] = self.error
        return doc


@dataclass(frozen=True)
class SearchTrace:
    entries: tuple[TraceEntry, ...]
    direction: str
    best_index: int
    exhausted: bool

    def to_doc(self) -> dict:
        return {
            "entries": [e.to_doc() for e in self.entries],
            "direction": self.direction,
            "best_index": self.best_index,
            "exhausted": self.exhausted,
        }


def _better(direction: str, a: float | None, b: float | None) -> bool:
    if a is None:
        return False
    if b is None:
        return True
    return a > b if direction == HIGHER else a < b


def _evaluate(objective, config: ParamConfig, index: int) -> TraceEntry:
    try:
        value = float(objective(config, index))
    except WorkbenchError as e:
        return TraceEntry(index, config, None, failed=True, error=str(e))
    if math.isnan(value):
        return TraceEntry(index, config, None, failed=True,
                          error="objective returned NaN")
    return TraceEntry(index, config, value)


def _best_index(entries, direction) -> int:
    best = 0
    for e in entries[1:]:
        if _better(direction, e.value, entries[best].value):
            best = e.index
    return best


def optimize(space: PipelineSpec, objective, strategy: SearchStrategy,
             direction: str, *, seed: int | None = None,
             budget: int | None = None) -> SearchTrace:
    """Run a search; objective is called as objective(config, index) -> float.

    Failures (WorkbenchError or NaN) mark the entry failed and rank worst.
    """
    if direction not in (HIGHER, LOWER):
        raise WorkbenchError(f"unknown direction {direction!r}")
    actual_seed = seed if seed is not None else (strategy.seed or 0)
    actual_budget = budget if budget is not None else strategy.budget
    if actual_budget < 1:
        raise WorkbenchError("search budget must be >= 1")
    if strategy.kind == RANDOM:
        entries, exhausted = _random_search(space, objective, actual_budget,
                                            actual_seed)
    else:
        entries, exhausted = _evolutionary_search(space, objective,
                                                  actual_budget, actual_seed,
                                                  strategy, direction)
    return SearchTrace(tuple(entries), direction,
                       _best_index(entries, direction), exhausted)


def _random_search(space, objective, budget, seed):
    cardinality = space_cardinality(space)
    rng = np.random.default_rng(derive_seed(seed, "order"))
    if not math.isinf(cardinality):
        configs = enumerate_configs(space)
        order = rng.permutation(len(configs))
        picked = [configs[i] for i in order[:min(budget, len(configs))]]
        exhausted = budget >= len(configs)
    else:
        picked, seen = [], set()
        draw = 0
        while len(picked) < budget:
            config = sample(space, derive_seed(seed, "draw", draw))
            draw += 1
            key = config.key()
            if key in seen and draw < budget * 16:
                continue  # skip duplicates while fresh draws are cheap
            seen.add(key)
            picked.append(config)
        exhausted = False
    entries = [_evaluate(objective, c, i) for i, c in enumerate(picked)]
    return entries, exhausted


def _evolutionary_search(space, objective, budget, seed, strategy, direction):
    rng = np.random.default_rng(derive_seed(seed, "evolve"))
    cardinality = space_cardinality(space)
    entries: list[TraceEntry] = []
    seen: set[str] = set()

    def exhausted_now() -> bool:
        return not math.isinf(cardinality) and len(seen) >= cardinality

    def run(config) -> TraceEntry:
        entry = _evaluate(objective, config, len(entries))
        entries.append(entry)
        seen.add(config.key())
        return entry

    for i in range(min(strategy.mu, budget)):
        if exhausted_now():
            break
        run(sample(space, derive_seed(seed, "init", i)))
    survivors = _select(list(entries), strategy.mu, direction)
    while len(entries) < budget and not exhausted_now():
        n_children = min(strategy.lam, budget - len(entries))
        children = []
        for _ in range(n_children):
            if exhausted_now():
                break
            parent = survivors[int(rng.integers(len(survivors)))]
            child = mutate_config(space, parent.config, rng,
                                  strategy.mutation_scale)
            children.append(run(child))
        survivors = _select(survivors + children, strategy.mu, direction)
    return entries, exhausted_now()


def _select(pool, mu, direction):
    """Best mu entries; ties keep the earlier evaluation."""
    def rank(e: TraceEntry):
        if e.value is None:
            return (1, 0.0, e.index)
        signed = -e.value if direction == HIGHER else e.value
        return (0, signed, e.index)
    return sorted(pool, key=rank)[:mu]


def best_of(trace: SearchTrace) -> ParamConfig:
    return trace.entries[trace.best_index].config

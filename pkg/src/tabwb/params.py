"""Searchable hyperparameter distributions.

Four kinds cover the workbench: Fixed pins a value, Choice enumerates,
IntRange/FloatRange span an interval on a linear or log scale. Ranges are
sampled uniformly in their scale space; integer draws round to the nearest
admissible value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np

SCALES = ("linear", "log")


@dataclass(frozen=True)
class Fixed:
    value: Any

    def issues(self) -> list[str]:
        return []

    def cardinality(self) -> int:
        return 1

    def contains(self, v) -> bool:
        return v == self.value

    def sample(self, rng: np.random.Generator):
        return self.value

    def enumerate(self) -> list:
        return [self.value]

    def mutate(self, v, rng: np.random.Generator, scale: float):
        return self.value

    def to_doc(self) -> dict:
        return {"dist": "fixed", "value": self.value}


@dataclass(frozen=True)
class Choice:
    values: tuple

    def __init__(self, values):
        object.__setattr__(self, "values", tuple(values))

    def issues(self) -> list[str]:
        return ["Choice must be non-empty"] if not self.values else []

    def cardinality(self) -> int:
        return len(self.values)

    def contains(self, v) -> bool:
        return v in self.values

    def sample(self, rng: np.random.Generator):
        return self.values[int(rng.integers(len(self.values)))]

    def enumerate(self) -> list:
        return list(self.values)

    def mutate(self, v, rng: np.random.Generator, scale: float):
        if rng.random() < scale:
            return self.sample(rng)
        return v

    def to_doc(self) -> dict:
        return {"dist": "choice", "values": list(self.values)}


def _range_issues(lo, hi, scale, label) -> list[str]:
    issues = []
    if scale not in SCALES:
        issues.append(f"{label}: unknown scale {scale!r}")
    if not lo < hi:
        issues.append(f"{label}: requires lo < hi, got [{lo}, {hi}]")
    if scale == "log" and lo <= 0:
        issues.append(f"{label}: log scale requires lo > 0")
    return issues


def _scale_draw(lo, hi, scale, rng) -> float:
    if scale == "log":
        return float(math.exp(rng.uniform(math.log(lo), math.log(hi))))
    return float(rng.uniform(lo, hi))


def _scale_step(v, lo, hi, scale, rng, width) -> float:
    if scale == "log":
        z = math.log(v) + rng.normal(0.0, width * (math.log(hi) - math.log(lo)))
        return float(math.exp(min(max(z, math.log(lo)), math.log(hi))))
    z = v + rng.normal(0.0, width * (hi - lo))
    return float(min(max(z, lo), hi))


@dataclass(frozen=True)
class IntRange:
    lo: int
    hi: int
    scale: str = "linear"

    def issues(self) -> list[str]:
        return _range_issues(self.lo, self.hi, self.scale, "IntRange")

    def cardinality(self) -> None:
        return None  # ranges make the space infinite by convention

    def contains(self, v) -> bool:
        return isinstance(v, int) and not isinstance(v, bool) and self.lo <= v <= self.hi

    def _round(self, x: float) -> int:
        return int(min(max(math.floor(x + 0.5), self.lo), self.hi))

    def sample(self, rng: np.random.Generator) -> int:
        return self._round(_scale_draw(self.lo, self.hi, self.scale, rng))

    def mutate(self, v, rng: np.random.Generator, scale: float) -> int:
        return self._round(_scale_step(float(v), self.lo, self.hi, self.scale, rng, scale))

    def to_doc(self) -> dict:
        return {"dist": "int_range", "lo": self.lo, "hi": self.hi, "scale": self.scale}


@dataclass(frozen=True)
class FloatRange:
    lo: float
    hi: float
    scale: str = "linear"

    def issues(self) -> list[str]:
        return _range_issues(self.lo, self.hi, self.scale, "FloatRange")

    def cardinality(self) -> None:
        return None

    def contains(self, v) -> bool:
        return isinstance(v, (int, float)) and not isinstance(v, bool) \
            and self.lo <= float(v) <= self.hi

    def sample(self, rng: np.random.Generator) -> float:
        return _scale_draw(self.lo, self.hi, self.scale, rng)

    def mutate(self, v, rng: np.random.Generator, scale: float) -> float:
        return _scale_step(float(v), self.lo, self.hi, self.scale, rng, scale)

    def to_doc(self) -> dict:
        return {"dist": "float_range", "lo": self.lo, "hi": self.hi, "scale": self.scale}


ParamDist = Fixed | Choice | IntRange | FloatRange


def dist_from_doc(doc) -> ParamDist:
    """Parse a distribution document; bare scalars are Fixed shorthand."""
    if not isinstance(doc, dict):
        return Fixed(doc)
    kind = doc.get("dist")
    if kind == "fixed":
        return Fixed(doc["value"])
    if kind == "choice":
        return Choice(doc["values"])
    if kind == "int_range":
        return IntRange(int(doc["lo"]), int(doc["hi"]), doc.get("scale", "linear"))
    if kind == "float_range":
        return FloatRange(float(doc["lo"]), float(doc["hi"]), doc.get("scale", "linear"))
    raise ValueError(f"unknown distribution kind {kind!r}")

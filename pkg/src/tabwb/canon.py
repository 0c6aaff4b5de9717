"""Canonical serialization, content digests, and seed derivation.

Everything that must be byte-stable across runs, platforms, and worker
counts funnels through this module: run records are hashed over their
canonical JSON form, and all randomness is derived from a base seed via
a fixed mixing function instead of shared RNG state.
"""

from __future__ import annotations

import hashlib
import json
import math
from typing import Any

import numpy as np

DIGEST_ALGORITHM = "sha256"


def to_plain(obj: Any) -> Any:
    """Convert nested containers and numpy scalars/arrays to plain Python.

    Floats must be finite: undefined quantities are represented as None
    upstream, never as NaN, so digests stay well-defined.
    """
    if obj is None or isinstance(obj, (str, bool, int)):
        return obj
    if isinstance(obj, float):
        if not math.isfinite(obj):
            raise ValueError("non-finite float in canonical document")
        return obj
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return to_plain(float(obj))
    if isinstance(obj, np.ndarray):
        return [to_plain(v) for v in obj.tolist()]
    if isinstance(obj, dict):
        out = {}
        for key, value in obj.items():
            if not isinstance(key, str):
                key = str(key)
            out[key] = to_plain(value)
        return out
    if isinstance(obj, (list, tuple, set, frozenset)):
        items = sorted(obj) if isinstance(obj, (set, frozenset)) else obj
        return [to_plain(v) for v in items]
    raise TypeError(f"cannot canonicalize value of type {type(obj).__name__}")


def canonical_json(obj: Any) -> str:
    """Serialize to canonical JSON: sorted keys, no whitespace, shortest
    round-trip float formatting (Python's repr), UTF-8 text."""
    return json.dumps(to_plain(obj), sort_keys=True, separators=(",", ":"),
                      ensure_ascii=False, allow_nan=False)


def content_digest(obj: Any) -> str:
    """Hex digest (sha256) over the canonical JSON bytes of `obj`."""
    payload = canonical_json(obj).encode("utf-8")
    return hashlib.sha256(payload).hexdigest()


def derive_seed(*parts: Any) -> int:
    """Mix an arbitrary tuple of labels/ints into a 63-bit seed.

    The mixing function is a sha256 over the canonical JSON of the parts,
    so derived seeds are stable across platforms and independent of the
    order in which parallel tasks run.
    """
    payload = canonical_json(list(parts)).encode("utf-8")
    raw = hashlib.sha256(payload).digest()
    return int.from_bytes(raw[:8], "big") & 0x7FFF_FFFF_FFFF_FFFF

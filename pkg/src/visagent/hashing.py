"""Deterministic digests and seed derivation used across the pipeline.

All mock backends and the procedural image generator derive their output
from these digests, so any test can recompute expected values.
"""

from __future__ import annotations

import hashlib
import json
from typing import Any

import numpy as np


def canonical_json(obj: Any) -> str:
    """Serialize to JSON with sorted keys and no whitespace.

    Used everywhere a payload digest is computed; two payloads digest
    equal iff their canonical form is byte-identical.
    """
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def digest_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def digest_text(text: str) -> str:
    return digest_bytes(text.encode("utf-8"))


def digest_obj(obj: Any) -> str:
    return digest_text(canonical_json(obj))


def digest_image(pixels: np.ndarray) -> str:
    """Digest of a raster image: shape, dtype and raw bytes."""
    arr = np.ascontiguousarray(pixels)
    header = f"{arr.shape}:{arr.dtype}".encode("ascii")
    return digest_bytes(header + arr.tobytes())


def int_from_digest(hexdigest: str, nbytes: int = 8) -> int:
    return int(hexdigest[: nbytes * 2], 16)


def derive_seed(base_seed: int, *labels: str | int) -> int:
    """Stable sub-seed for a labelled purpose (per-scene, per-element, ...)."""
    tag = ":".join(str(x) for x in (base_seed, *labels))
    return int_from_digest(digest_text(tag))


def rng_for(*entropy: int) -> np.random.Generator:
    return np.random.default_rng(list(entropy))

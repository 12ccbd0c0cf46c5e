"""Deterministic mocks for image, layout, embedding and segmentation backends.

The procedural image spec (documented here so oracles can recompute it):

* ``base`` is the first three bytes of sha256(prompt) broadcast over the
  canvas; a noise ``pattern`` in [0, 64) drawn from a generator seeded by
  ``[seed, first-8-bytes-of-sha256(prompt)]`` is added modulo 256.
* When a reference record is supplied, the blue channel is overwritten
  with the first byte of the reference image's digest.
"""

from __future__ import annotations

import time
from typing import Any

import numpy as np

from ..errors import BackendError
from ..hashing import digest_image, digest_obj, digest_text, int_from_digest, rng_for
from .base import (
    BackendDescriptor,
    Capability,
    EmbeddingBackend,
    ImageGeneratorBackend,
    MultimodalBackend,
    SegmentationBackend,
    TokenEncoder,
)


def _reference_image(reference_record: Any) -> np.ndarray | None:
    if reference_record is None:
        return None
    if isinstance(reference_record, np.ndarray):
        return reference_record
    image = getattr(reference_record, "image", None)
    if image is None:
        raise BackendError("reference record carries no image")
    return image


class ProceduralImageBackend(ImageGeneratorBackend):
    """Renders stable pseudo-images from (prompt, seed, reference)."""

    def __init__(self, canvas: tuple[int, int] = (64, 64), name: str = "mock-image") -> None:
        super().__init__()
        self.canvas = canvas
        self.descriptor = BackendDescriptor(
            name=name,
            capability=Capability.IMAGE_GENERATION,
            deterministic=True,
            concurrency_safe=True,
        )

    def generate(
        self,
        prompt: str,
        reference_record: Any | None = None,
        seed: int = 0,
        size: tuple[int, int] | None = None,
    ) -> np.ndarray:
        started = time.monotonic()
        height, width = size or self.canvas
        prompt_digest = digest_text(prompt)
        base = np.frombuffer(bytes.fromhex(prompt_digest[:6]), dtype=np.uint8)
        rng = rng_for(seed, int_from_digest(prompt_digest))
        pattern = rng.integers(0, 64, size=(height, width, 3), dtype=np.uint16)
        pixels = ((base.astype(np.uint16) + pattern) % 256).astype(np.uint8)
        ref_digest = None
        reference = _reference_image(reference_record)
        if reference is not None:
            ref_digest = digest_image(reference)
            pixels[..., 2] = int(ref_digest[:2], 16)
        self._record(
            "generate",
            digest_obj({"prompt": prompt, "seed": seed, "size": [height, width]}),
            digest_image(pixels),
            started,
            reference_digest=ref_digest,
        )
        return pixels


class ScriptedLayoutBackend(MultimodalBackend):
    """Pops one scripted proposal list per call; raw boxes, unvalidated."""

    def __init__(
        self,
        proposals: list[list[tuple[float, float, float, float]]],
        name: str = "scripted-layout",
    ) -> None:
        super().__init__()
        self._queue = [list(p) for p in proposals]
        self.last_inputs: tuple[dict[str, Any], np.ndarray, dict[str, np.ndarray]] | None = None
        self.descriptor = BackendDescriptor(
            name=name,
            capability=Capability.MULTIMODAL_LAYOUT,
            deterministic=True,
            concurrency_safe=False,
        )

    def propose_layout(
        self,
        prompts: dict[str, Any],
        bg_image: np.ndarray,
        fg_images: dict[str, np.ndarray],
    ) -> list[tuple[float, float, float, float]]:
        started = time.monotonic()
        self.last_inputs = (prompts, bg_image, fg_images)
        if not self._queue:
            raise BackendError("scripted layout backend exhausted")
        proposal = self._queue.pop(0)
        in_digest = digest_obj(
            {
                "prompts": prompts,
                "bg": digest_image(bg_image),
                "fg": {cid: digest_image(img) for cid, img in fg_images.items()},
            }
        )
        self._record("propose_layout", in_digest, digest_obj(proposal), started)
        return [tuple(box) for box in proposal]


class SpreadLayoutBackend(MultimodalBackend):
    """Deterministic default: subjects evenly spread along the lower band."""

    def __init__(self, name: str = "mock-layout") -> None:
        super().__init__()
        self.last_inputs: tuple[dict[str, Any], np.ndarray, dict[str, np.ndarray]] | None = None
        self.descriptor = BackendDescriptor(
            name=name,
            capability=Capability.MULTIMODAL_LAYOUT,
            deterministic=True,
            concurrency_safe=True,
        )

    def propose_layout(
        self,
        prompts: dict[str, Any],
        bg_image: np.ndarray,
        fg_images: dict[str, np.ndarray],
    ) -> list[tuple[float, float, float, float]]:
        started = time.monotonic()
        self.last_inputs = (prompts, bg_image, fg_images)
        count = len(fg_images)
        proposal: list[tuple[float, float, float, float]] = []
        for j in range(count):
            center = (j + 1) / (count + 1)
            half = min(0.28, 0.8 / count) / 2
            proposal.append((center - half, 0.45, center + half, 0.95))
        in_digest = digest_obj(
            {
                "prompts": prompts,
                "bg": digest_image(bg_image),
                "fg": {cid: digest_image(img) for cid, img in fg_images.items()},
            }
        )
        self._record("propose_layout", in_digest, digest_obj(proposal), started)
        return proposal


class HashEmbeddingBackend(EmbeddingBackend):
    """Unit vectors drawn from a generator seeded by the item digest."""

    def __init__(self, dim: int = 32, name: str = "mock-embedding") -> None:
        super().__init__()
        self.dim = dim
        self.descriptor = BackendDescriptor(
            name=name,
            capability=Capability.EMBEDDING,
            deterministic=True,
            concurrency_safe=True,
        )

    def embed(self, item: str | np.ndarray) -> np.ndarray:
        started = time.monotonic()
        item_digest = self.item_digest(item)
        rng = rng_for(self.dim, int_from_digest(item_digest))
        vector = rng.standard_normal(self.dim)
        vector /= np.linalg.norm(vector)
        self._record("embed", item_digest, digest_image(vector), started)
        return vector


def unit_vectors_with_cosine(cosine: float, dim: int, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Two unit vectors with the requested cosine, via Gram-Schmidt."""
    if not -1.0 <= cosine <= 1.0:
        raise ValueError("cosine must lie in [-1, 1]")
    rng = rng_for(dim, seed)
    first = rng.standard_normal(dim)
    first /= np.linalg.norm(first)
    raw = rng.standard_normal(dim)
    ortho = raw - (raw @ first) * first
    ortho /= np.linalg.norm(ortho)
    second = cosine * first + np.sqrt(max(0.0, 1.0 - cosine**2)) * ortho
    return first, second


class ScriptedEmbeddingBackend(EmbeddingBackend):
    """Fixed vectors for registered items, hash fallback for the rest."""

    def __init__(self, dim: int = 32, strict: bool = False, name: str = "scripted-embedding") -> None:
        super().__init__()
        self.dim = dim
        self.strict = strict
        self._vectors: dict[str, np.ndarray] = {}
        self._fallback = HashEmbeddingBackend(dim=dim)
        self.descriptor = BackendDescriptor(
            name=name,
            capability=Capability.EMBEDDING,
            deterministic=True,
            concurrency_safe=True,
        )

    def register(self, item: str | np.ndarray, vector: np.ndarray) -> None:
        vector = np.asarray(vector, dtype=np.float64)
        self._vectors[self.item_digest(item)] = vector / np.linalg.norm(vector)

    def register_pair(
        self, item_a: str | np.ndarray, item_b: str | np.ndarray, cosine: float, seed: int = 0
    ) -> None:
        first, second = unit_vectors_with_cosine(cosine, self.dim, seed)
        self._vectors[self.item_digest(item_a)] = first
        self._vectors[self.item_digest(item_b)] = second

    def embed(self, item: str | np.ndarray) -> np.ndarray:
        started = time.monotonic()
        item_digest = self.item_digest(item)
        vector = self._vectors.get(item_digest)
        if vector is None:
            if self.strict:
                raise BackendError(f"no scripted embedding for digest {item_digest[:16]}")
            vector = self._fallback.embed(item)
        self._record("embed", item_digest, digest_image(vector), started)
        return vector


class BoxSegmentationBackend(SegmentationBackend):
    """Soft mask equal to the bbox rectangle; empty labels give zero masks."""

    def __init__(self, name: str = "mock-segmentation") -> None:
        super().__init__()
        self.descriptor = BackendDescriptor(
            name=name,
            capability=Capability.SEGMENTATION,
            deterministic=True,
            concurrency_safe=True,
        )

    def subject_mask(
        self,
        image: np.ndarray,
        label: str,
        bbox: tuple[float, float, float, float],
    ) -> np.ndarray:
        from ..saca.masks import grid_rect

        started = time.monotonic()
        height, width = image.shape[:2]
        mask = np.zeros((height, width), dtype=np.float32)
        if label.strip():
            y0, y1, x0, x1 = grid_rect(bbox, height, width)
            mask[y0:y1, x0:x1] = 1.0
        in_digest = digest_obj({"image": digest_image(image), "label": label, "bbox": list(bbox)})
        self._record("subject_mask", in_digest, digest_image(mask), started)
        return mask


class HashTokenEncoder(TokenEncoder):
    """Pseudo-encoder: token matrices seeded by the content digest."""

    def __init__(self, name: str = "mock-encoder") -> None:
        super().__init__()
        self.descriptor = BackendDescriptor(
            name=name,
            capability=Capability.EMBEDDING,
            deterministic=True,
            concurrency_safe=True,
        )

    def _tokens(self, content_digest: str, d_model: int, num_tokens: int) -> np.ndarray:
        rng = rng_for(d_model, num_tokens, int_from_digest(content_digest))
        return rng.standard_normal((num_tokens, d_model)).astype(np.float32)

    def encode_text(self, text: str, d_model: int, num_tokens: int = 8) -> np.ndarray:
        started = time.monotonic()
        tokens = self._tokens(digest_text(text), d_model, num_tokens)
        self._record("encode_text", digest_text(text), digest_image(tokens), started)
        return tokens

    def encode_image(self, pixels: np.ndarray, d_model: int, num_tokens: int = 8) -> np.ndarray:
        started = time.monotonic()
        tokens = self._tokens(digest_image(pixels), d_model, num_tokens)
        self._record("encode_image", digest_image(pixels), digest_image(tokens), started)
        return tokens


__all__ = [
    "BoxSegmentationBackend",
    "HashEmbeddingBackend",
    "HashTokenEncoder",
    "ProceduralImageBackend",
    "ScriptedEmbeddingBackend",
    "ScriptedLayoutBackend",
    "SpreadLayoutBackend",
    "unit_vectors_with_cosine",
]

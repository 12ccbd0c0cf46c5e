"""Backend interfaces, call records, and the bounded-retry helper.

Every external model sits behind one of the abstract classes below. Each
call appends exactly one CallRecord to the backend's log, which pipeline
event logs reconcile against. No module outside ``visagent.backends``
performs network or model I/O.
"""

from __future__ import annotations

import threading
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum
from typing import Any, Callable

import numpy as np

from ..errors import SchemaError
from ..hashing import digest_image, digest_obj, digest_text


class Capability(str, Enum):
    TEXT = "text"
    MULTIMODAL_LAYOUT = "multimodal-layout"
    IMAGE_GENERATION = "image-generation"
    EMBEDDING = "embedding"
    SEGMENTATION = "segmentation"


@dataclass(frozen=True)
class BackendDescriptor:
    name: str
    capability: Capability
    deterministic: bool
    concurrency_safe: bool


@dataclass(frozen=True)
class CallRecord:
    backend_name: str
    role: str
    input_digest: str
    output_digest: str
    wall_time: float
    retry_index: int = 0
    reference_digest: str | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "backend_name": self.backend_name,
            "role": self.role,
            "input_digest": self.input_digest,
            "output_digest": self.output_digest,
            "wall_time": self.wall_time,
            "retry_index": self.retry_index,
            "reference_digest": self.reference_digest,
        }

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "CallRecord":
        return cls(**doc)


class CallLog:
    """Append-only record sink, safe for concurrent writers."""

    def __init__(self) -> None:
        self._records: list[CallRecord] = []
        self._lock = threading.Lock()

    def append(self, record: CallRecord) -> None:
        with self._lock:
            self._records.append(record)

    def records(self) -> list[CallRecord]:
        with self._lock:
            return list(self._records)

    def extend(self, records: list[CallRecord]) -> None:
        with self._lock:
            self._records.extend(records)

    def __len__(self) -> int:
        with self._lock:
            return len(self._records)


class Backend(ABC):
    """Common plumbing: descriptor plus per-instance call log."""

    descriptor: BackendDescriptor

    def __init__(self) -> None:
        self.calls = CallLog()

    def _record(
        self,
        role: str,
        input_digest: str,
        output_digest: str,
        started: float,
        retry_index: int = 0,
        reference_digest: str | None = None,
    ) -> None:
        self.calls.append(
            CallRecord(
                backend_name=self.descriptor.name,
                role=role,
                input_digest=input_digest,
                output_digest=output_digest,
                wall_time=time.monotonic() - started,
                retry_index=retry_index,
                reference_digest=reference_digest,
            )
        )


class TextModelBackend(Backend):
    """Instruction-following LLM producing structured documents."""

    @abstractmethod
    def complete(
        self, role: str, instruction: str, payload: dict[str, Any], retry_index: int = 0
    ) -> dict[str, Any]:
        """Return a structured document for the given agent role.

        ``payload`` must be a JSON-serializable dict; its canonical digest
        keys transcript replay.
        """


class MultimodalBackend(Backend):
    """LMM that proposes subject placement from prompts plus images."""

    @abstractmethod
    def propose_layout(
        self,
        prompts: dict[str, Any],
        bg_image: np.ndarray,
        fg_images: dict[str, np.ndarray],
    ) -> list[tuple[float, float, float, float]]:
        """Raw bbox proposals in normalized coordinates, one per fg image.

        Proposals are passed through unvalidated; the caller owns validation.
        """


class ImageGeneratorBackend(Backend):
    """Text-to-image generator with optional reference conditioning."""

    @abstractmethod
    def generate(
        self,
        prompt: str,
        reference_record: Any | None = None,
        seed: int = 0,
        size: tuple[int, int] | None = None,
    ) -> np.ndarray:
        """Return an RGB uint8 raster of the requested ``(height, width)``."""


class EmbeddingBackend(Backend):
    """Maps text or images to unit vectors for similarity scoring."""

    @abstractmethod
    def embed(self, item: str | np.ndarray) -> np.ndarray:
        """Return a 1-D unit vector (norm 1 within 1e-6)."""

    @staticmethod
    def item_digest(item: str | np.ndarray) -> str:
        if isinstance(item, str):
            return digest_text(item)
        return digest_image(item)


class SegmentationBackend(Backend):
    """Open-vocabulary subject segmentation within a bounding box."""

    @abstractmethod
    def subject_mask(
        self,
        image: np.ndarray,
        label: str,
        bbox: tuple[float, float, float, float],
    ) -> np.ndarray:
        """Soft mask in [0, 1] over the image grid, zero outside ``bbox``."""


class TokenEncoder(Backend):
    """Encodes prompts and rasters into token sequences for attention."""

    @abstractmethod
    def encode_text(self, text: str, d_model: int, num_tokens: int = 8) -> np.ndarray:
        """(num_tokens, d_model) float32 token matrix."""

    @abstractmethod
    def encode_image(self, pixels: np.ndarray, d_model: int, num_tokens: int = 8) -> np.ndarray:
        """(num_tokens, d_model) float32 token matrix."""


def complete_with_retry(
    backend: TextModelBackend,
    role: str,
    instruction: str,
    payload: dict[str, Any],
    validator: Callable[[dict[str, Any]], None],
    retries: int = 2,
) -> dict[str, Any]:
    """Call ``complete`` and validate, re-asking up to ``retries`` times.

    On SchemaError the violation text is appended to the instruction for
    the re-ask; after the budget is spent the last violation is surfaced.
    """
    attempt_instruction = instruction
    last: SchemaError | None = None
    for attempt in range(retries + 1):
        reply = backend.complete(role, attempt_instruction, payload, retry_index=attempt)
        try:
            validator(reply)
            return reply
        except SchemaError as exc:
            last = exc
            attempt_instruction = f"{instruction}\nPrevious reply was rejected: {exc}"
    assert last is not None
    raise last


__all__ = [
    "Backend",
    "BackendDescriptor",
    "CallLog",
    "CallRecord",
    "Capability",
    "EmbeddingBackend",
    "ImageGeneratorBackend",
    "MultimodalBackend",
    "SegmentationBackend",
    "TextModelBackend",
    "TokenEncoder",
    "complete_with_retry",
    "digest_obj",
]

"""Pluggable model backends with deterministic mocks for hermetic runs."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

from .base import (
    Backend,
    BackendDescriptor,
    CallLog,
    CallRecord,
    Capability,
    EmbeddingBackend,
    ImageGeneratorBackend,
    MultimodalBackend,
    SegmentationBackend,
    TextModelBackend,
    TokenEncoder,
    complete_with_retry,
)
from .mock_media import (
    BoxSegmentationBackend,
    HashEmbeddingBackend,
    HashTokenEncoder,
    ProceduralImageBackend,
    ScriptedEmbeddingBackend,
    ScriptedLayoutBackend,
    SpreadLayoutBackend,
    unit_vectors_with_cosine,
)
from .mock_text import (
    MockTextBackend,
    ScriptedTextBackend,
    TranscriptRecordingBackend,
)
from . import registry


@dataclass
class BackendSet:
    """The full complement of backends one run needs."""

    text: TextModelBackend
    image: ImageGeneratorBackend
    layout: MultimodalBackend
    embedding: EmbeddingBackend
    segmentation: SegmentationBackend
    encoder: TokenEncoder

    def named(self) -> dict[str, Backend]:
        return {
            "text": self.text,
            "image": self.image,
            "layout": self.layout,
            "embedding": self.embedding,
            "segmentation": self.segmentation,
            "encoder": self.encoder,
        }

    def all_deterministic(self) -> bool:
        return all(b.descriptor.deterministic for b in self.named().values())

    def call_records(self) -> list[CallRecord]:
        records: list[CallRecord] = []
        for backend in self.named().values():
            records.extend(backend.calls.records())
        return records

    @classmethod
    def mocks(
        cls,
        canvas: tuple[int, int] = (64, 64),
        transcript: Any | None = None,
        embedding_dim: int = 32,
    ) -> "BackendSet":
        text = (
            MockTextBackend(mode="strict", transcript=transcript)
            if transcript is not None
            else MockTextBackend(mode="generative")
        )
        return cls(
            text=text,
            image=ProceduralImageBackend(canvas=canvas),
            layout=SpreadLayoutBackend(),
            embedding=HashEmbeddingBackend(dim=embedding_dim),
            segmentation=BoxSegmentationBackend(),
            encoder=HashTokenEncoder(),
        )

    @classmethod
    def from_names(cls, names: dict[str, str], options: dict[str, dict] | None = None) -> "BackendSet":
        options = options or {}
        return cls(
            text=registry.create_text_backend(names.get("text", "mock"), **options.get("text", {})),
            image=registry.create_image_backend(names.get("image", "mock"), **options.get("image", {})),
            layout=registry.create_layout_backend(names.get("layout", "mock"), **options.get("layout", {})),
            embedding=registry.create_embedding_backend(
                names.get("embedding", "mock"), **options.get("embedding", {})
            ),
            segmentation=registry.create_segmentation_backend(
                names.get("segmentation", "mock"), **options.get("segmentation", {})
            ),
            encoder=registry.create_token_encoder(
                names.get("encoder", "mock"), **options.get("encoder", {})
            ),
        )


__all__ = [
    "Backend",
    "BackendDescriptor",
    "BackendSet",
    "BoxSegmentationBackend",
    "CallLog",
    "CallRecord",
    "Capability",
    "EmbeddingBackend",
    "HashEmbeddingBackend",
    "HashTokenEncoder",
    "ImageGeneratorBackend",
    "MockTextBackend",
    "MultimodalBackend",
    "ProceduralImageBackend",
    "ScriptedEmbeddingBackend",
    "ScriptedLayoutBackend",
    "ScriptedTextBackend",
    "SegmentationBackend",
    "SpreadLayoutBackend",
    "TextModelBackend",
    "TokenEncoder",
    "TranscriptRecordingBackend",
    "complete_with_retry",
    "registry",
    "unit_vectors_with_cosine",
]

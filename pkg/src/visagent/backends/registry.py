"""Name-based backend construction for config files and environment vars."""

from __future__ import annotations

import os
from typing import Any

from ..errors import ConfigError
from .base import (
    EmbeddingBackend,
    ImageGeneratorBackend,
    MultimodalBackend,
    SegmentationBackend,
    TextModelBackend,
    TokenEncoder,
)
from .mock_media import (
    BoxSegmentationBackend,
    HashEmbeddingBackend,
    HashTokenEncoder,
    ProceduralImageBackend,
    SpreadLayoutBackend,
)
from .mock_text import MockTextBackend

ENV_TEXT_BACKEND = "VISAGENT_TEXT_BACKEND"
ENV_IMAGE_BACKEND = "VISAGENT_IMAGE_BACKEND"


def create_text_backend(name: str, **options: Any) -> TextModelBackend:
    if name == "mock":
        return MockTextBackend(mode="generative")
    if name == "mock-strict":
        transcript = options.get("transcript")
        if not transcript:
            raise ConfigError("mock-strict text backend needs a 'transcript' option")
        return MockTextBackend(mode="strict", transcript=transcript)
    if name == "hosted":
        from .hosted import HostedChatTextBackend

        return HostedChatTextBackend()
    raise ConfigError(f"unknown text backend {name!r}")


def create_image_backend(name: str, **options: Any) -> ImageGeneratorBackend:
    if name == "mock":
        return ProceduralImageBackend(canvas=tuple(options.get("canvas", (64, 64))))
    raise ConfigError(f"unknown image backend {name!r}")


def create_layout_backend(name: str, **options: Any) -> MultimodalBackend:
    if name == "mock":
        return SpreadLayoutBackend()
    raise ConfigError(f"unknown layout backend {name!r}")


def create_embedding_backend(name: str, **options: Any) -> EmbeddingBackend:
    if name == "mock":
        return HashEmbeddingBackend(dim=int(options.get("dim", 32)))
    raise ConfigError(f"unknown embedding backend {name!r}")


def create_segmentation_backend(name: str, **options: Any) -> SegmentationBackend:
    if name == "mock":
        return BoxSegmentationBackend()
    raise ConfigError(f"unknown segmentation backend {name!r}")


def create_token_encoder(name: str, **options: Any) -> TokenEncoder:
    if name == "mock":
        return HashTokenEncoder()
    raise ConfigError(f"unknown token encoder {name!r}")


def default_text_backend_name() -> str:
    return os.environ.get(ENV_TEXT_BACKEND, "mock")


def default_image_backend_name() -> str:
    return os.environ.get(ENV_IMAGE_BACKEND, "mock")

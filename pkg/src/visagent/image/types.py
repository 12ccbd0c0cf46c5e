"""Domain types for scene assembly: elements, layouts, stitches, renders."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from ..errors import InvariantViolation


class ElementKind(str, Enum):
    BACKGROUND = "background"
    FOREGROUND = "foreground"


@dataclass
class ElementImage:
    kind: ElementKind
    scene_index: int
    pixels: np.ndarray
    generation_seed: int
    character_id: str | None = None

    def __post_init__(self) -> None:
        if self.kind == ElementKind.BACKGROUND and self.character_id is not None:
            raise InvariantViolation("background elements carry no character_id")
        if self.kind == ElementKind.FOREGROUND and not self.character_id:
            raise InvariantViolation("foreground elements need a character_id")
        if self.pixels.ndim != 3 or self.pixels.shape[2] != 3:
            raise InvariantViolation("element pixels must be (H, W, 3) RGB")


@dataclass
class ReferenceRecord:
    """One stored appearance of a character: image, tokens, provenance."""

    character_id: str
    image: np.ndarray
    tokens: np.ndarray
    scene_index: int


class SubjectStorage:
    """Per-character reference records threaded across scenes.

    Record lists only grow; generation for a character that already has a
    record always consumes the most recent one.
    """

    def __init__(self) -> None:
        self._records: dict[str, list[ReferenceRecord]] = {}

    def latest(self, character_id: str) -> ReferenceRecord | None:
        records = self._records.get(character_id)
        return records[-1] if records else None

    def add(self, record: ReferenceRecord) -> None:
        self._records.setdefault(record.character_id, []).append(record)

    def counts(self) -> dict[str, int]:
        return {cid: len(records) for cid, records in self._records.items()}

    def records(self, character_id: str) -> list[ReferenceRecord]:
        return list(self._records.get(character_id, []))

    def character_ids(self) -> list[str]:
        return list(self._records.keys())


@dataclass(frozen=True)
class Layout:
    scene_index: int
    character_id: str
    bbox: tuple[float, float, float, float]
    z_order: int

    def __post_init__(self) -> None:
        x_min, y_min, x_max, y_max = self.bbox
        if not (x_min < x_max and y_min < y_max):
            raise InvariantViolation(f"degenerate bbox {self.bbox}")
        if not all(0.0 <= v <= 1.0 for v in self.bbox):
            raise InvariantViolation(f"bbox {self.bbox} outside [0, 1]")

    @property
    def area(self) -> float:
        x_min, y_min, x_max, y_max = self.bbox
        return (x_max - x_min) * (y_max - y_min)


BACKGROUND_LABEL = "background"


@dataclass
class StitchedImage:
    """Layer-stacked composite with per-pixel provenance.

    ``provenance`` holds indices into ``provenance_labels`` (0 is always
    the background) so every pixel has exactly one source layer.
    """

    scene_index: int
    pixels: np.ndarray
    masks: dict[str, np.ndarray] = field(default_factory=dict)
    provenance: np.ndarray | None = None
    provenance_labels: tuple[str, ...] = (BACKGROUND_LABEL,)
    notes: tuple[str, ...] = ()

    def provenance_of(self, row: int, col: int) -> str:
        assert self.provenance is not None
        return self.provenance_labels[int(self.provenance[row, col])]


@dataclass
class RenderedScene:
    scene_index: int
    pixels: np.ndarray
    renderer_config_digest: str
    lambda_trace: tuple[float, ...]


@dataclass
class SceneAssembly:
    """Everything produced for one scene on the way to its final image."""

    scene_index: int
    elements: list[ElementImage] = field(default_factory=list)
    layouts: list[Layout] = field(default_factory=list)
    stitched: StitchedImage | None = None
    rendered: RenderedScene | None = None

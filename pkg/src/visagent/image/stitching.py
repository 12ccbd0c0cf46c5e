"""Segmentation-based layer stitching of foreground elements over a background.

Foreground elements are resized into their boxes with an
aspect-preserving fit anchored bottom-center (subjects stand on the
ground line), masked by the segmentation backend, and stacked in
ascending z-order. Pixels never touched by any mask stay bit-identical
to the background.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
from PIL import Image

from ..backends.base import SegmentationBackend
from ..errors import InvariantViolation
from ..saca.masks import grid_rect
from .types import BACKGROUND_LABEL, ElementImage, Layout, StitchedImage


def fit_into_rect(
    pixels: np.ndarray, rect: tuple[int, int, int, int]
) -> tuple[np.ndarray, tuple[int, int]]:
    """Aspect-preserving resize into (y0, y1, x0, x1); bottom-center anchor.

    Returns the resized patch and its (top, left) placement on the canvas.
    """
    y0, y1, x0, x1 = rect
    rect_h, rect_w = y1 - y0, x1 - x0
    src_h, src_w = pixels.shape[:2]
    scale = min(rect_h / src_h, rect_w / src_w)
    new_h = max(1, int(round(src_h * scale)))
    new_w = max(1, int(round(src_w * scale)))
    patch = np.asarray(
        Image.fromarray(pixels).resize((new_w, new_h), Image.Resampling.BILINEAR)
    )
    top = y1 - new_h
    left = x0 + (rect_w - new_w) // 2
    return patch, (top, left)


def stitch(
    bg: ElementImage,
    fg_elements: Sequence[ElementImage],
    layouts: Sequence[Layout],
    masker: SegmentationBackend,
) -> StitchedImage:
    """Composite FG elements over the BG in ascending z-order.

    An all-zero subject mask falls back to the rectangular support of the
    placed element, with a provenance note recording the fallback.
    """
    canvas = bg.pixels.astype(np.float32).copy()
    height, width = canvas.shape[:2]
    provenance = np.zeros((height, width), dtype=np.int32)
    labels: list[str] = [BACKGROUND_LABEL]
    masks: dict[str, np.ndarray] = {}
    notes: list[str] = []

    fg_by_id = {e.character_id: e for e in fg_elements if e.character_id}
    ordered = sorted(layouts, key=lambda l: l.z_order)
    if len({l.z_order for l in layouts}) != len(list(layouts)):
        raise InvariantViolation("z_order values must be unique per scene")

    for layout in ordered:
        element = fg_by_id.get(layout.character_id)
        if element is None:
            raise InvariantViolation(f"no foreground element for {layout.character_id!r}")
        rect = grid_rect(layout.bbox, height, width)
        patch, (top, left) = fit_into_rect(element.pixels, rect)
        patch_h, patch_w = patch.shape[:2]

        placed = np.zeros_like(canvas)
        placed[top : top + patch_h, left : left + patch_w] = patch
        support = np.zeros((height, width), dtype=np.float32)
        support[top : top + patch_h, left : left + patch_w] = 1.0

        soft = masker.subject_mask(placed.astype(np.uint8), layout.character_id, layout.bbox)
        mask = np.clip(soft, 0.0, 1.0).astype(np.float32) * support
        if not mask.any():
            mask = support
            notes.append(f"empty subject mask for {layout.character_id}; used element rectangle")

        covered = mask > 0.0
        canvas[covered] = (
            mask[covered, None] * placed[covered] + (1.0 - mask[covered, None]) * canvas[covered]
        )
        owner_index = len(labels)
        labels.append(layout.character_id)
        provenance[mask > 0.5] = owner_index
        masks[layout.character_id] = mask

    return StitchedImage(
        scene_index=bg.scene_index,
        pixels=np.clip(np.rint(canvas), 0, 255).astype(np.uint8),
        masks=masks,
        provenance=provenance,
        provenance_labels=tuple(labels),
        notes=tuple(notes),
    )

"""Region mask rasterization for semantic-aware cross-attention.

The rasterization convention: a normalized bbox (x_min, y_min, x_max,
y_max) covers grid columns [floor(x_min*W), ceil(x_max*W)) and rows
[floor(y_min*H), ceil(y_max*H)). Any bbox with positive area therefore
owns at least one cell before occlusion; overlaps are resolved to the
higher z-order, and the background mask is the exact complement, so the
masks always partition the grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import DegenerateRegion

BACKGROUND_REGION = "background"
GLOBAL_REGION = "global"


def grid_rect(
    bbox: tuple[float, float, float, float], height: int, width: int
) -> tuple[int, int, int, int]:
    """(y0, y1, x0, x1) cell bounds of a normalized bbox on a grid."""
    x_min, y_min, x_max, y_max = bbox
    x0 = max(0, math.floor(x_min * width))
    x1 = min(width, math.ceil(x_max * width))
    y0 = max(0, math.floor(y_min * height))
    y1 = min(height, math.ceil(y_max * height))
    return y0, y1, x0, x1


@dataclass
class RegionMaskSet:
    """Per-character masks, background complement, and the all-ones global."""

    latent_height: int
    latent_width: int
    character_masks: dict[str, np.ndarray] = field(default_factory=dict)
    bg_mask: np.ndarray | None = None

    @property
    def global_mask(self) -> np.ndarray:
        return np.ones((self.latent_height, self.latent_width), dtype=bool)

    def region_ids(self) -> list[str]:
        return [*self.character_masks.keys(), BACKGROUND_REGION]

    def mask_for(self, region_id: str) -> np.ndarray:
        if region_id == BACKGROUND_REGION:
            assert self.bg_mask is not None
            return self.bg_mask
        if region_id == GLOBAL_REGION:
            return self.global_mask
        return self.character_masks[region_id]

    def partition_sum(self) -> np.ndarray:
        """Sum of character masks and bg mask; all-ones iff a valid partition."""
        total = np.zeros((self.latent_height, self.latent_width), dtype=np.int64)
        for mask in self.character_masks.values():
            total += mask.astype(np.int64)
        if self.bg_mask is not None:
            total += self.bg_mask.astype(np.int64)
        return total


def rasterize_masks(layouts: list, latent_h: int, latent_w: int) -> RegionMaskSet:
    """Rasterize layouts onto the latent grid, higher z-order winning overlaps.

    Raises DegenerateRegion when a bbox covers zero cells at this
    resolution (the caller may retry at a finer grid). A region fully
    occluded by higher z-order boxes keeps an empty mask without error.
    """
    owner = np.full((latent_h, latent_w), -1, dtype=np.int64)
    ordered = sorted(layouts, key=lambda l: l.z_order)
    for rank, layout in enumerate(ordered):
        y0, y1, x0, x1 = grid_rect(layout.bbox, latent_h, latent_w)
        if y0 >= y1 or x0 >= x1:
            raise DegenerateRegion(
                f"bbox {layout.bbox} rasterizes to zero cells on a "
                f"{latent_h}x{latent_w} grid"
            )
        owner[y0:y1, x0:x1] = rank
    masks = RegionMaskSet(latent_height=latent_h, latent_width=latent_w)
    for rank, layout in enumerate(ordered):
        masks.character_masks[layout.character_id] = owner == rank
    masks.bg_mask = owner == -1
    return masks


__all__ = [
    "BACKGROUND_REGION",
    "GLOBAL_REGION",
    "RegionMaskSet",
    "grid_rect",
    "rasterize_masks",
]

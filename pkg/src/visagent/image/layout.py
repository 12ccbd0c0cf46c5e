"""Subject placement: layout proposals from the multimodal backend, validated."""

from __future__ import annotations

from typing import Sequence

from ..backends.base import MultimodalBackend
from ..errors import LayoutInvalid
from ..story.types import LayeredPrompts
from .types import ElementImage, Layout


def validate_layout(
    layout: Layout | tuple[float, float, float, float], min_area: float = 0.001
) -> list[str]:
    """All violations of coordinate ordering, bounds, and minimum area."""
    bbox = layout.bbox if isinstance(layout, Layout) else tuple(layout)
    x_min, y_min, x_max, y_max = bbox
    violations: list[str] = []
    if x_min >= x_max:
        violations.append(f"x_min {x_min} >= x_max {x_max}")
    if y_min >= y_max:
        violations.append(f"y_min {y_min} >= y_max {y_max}")
    out_of_bounds = [v for v in bbox if not 0.0 <= v <= 1.0]
    if out_of_bounds:
        violations.append(f"coordinates outside [0, 1]: {out_of_bounds}")
    if not violations:
        area = (x_max - x_min) * (y_max - y_min)
        if area < min_area:
            violations.append(f"bbox area {area:.6f} below minimum {min_area}")
    return violations


def locate_subjects(
    layered: LayeredPrompts,
    bg: ElementImage,
    fg_elements: Sequence[ElementImage],
    backend: MultimodalBackend,
    min_area: float = 0.001,
    retries: int = 2,
    instruction: str = "",
) -> list[Layout]:
    """One validated Layout per scene character, z-ordered by cast order.

    The backend receives the layered prompts and the element images
    together; proposals failing validation are re-asked a bounded number
    of times before LayoutInvalid surfaces.
    """
    character_ids = list(layered.fg_prompts.keys())
    if not character_ids:
        return []
    fg_by_id = {e.character_id: e for e in fg_elements if e.character_id}
    missing = [cid for cid in character_ids if cid not in fg_by_id]
    if missing:
        raise LayoutInvalid(f"no foreground element for characters {missing}")

    prompts = {
        "instruction": instruction,
        "bg": layered.bg_prompt,
        "fg": dict(layered.fg_prompts),
        "global": layered.global_prompt,
    }
    fg_images = {cid: fg_by_id[cid].pixels for cid in character_ids}

    last_violations: list[str] = []
    for _ in range(retries + 1):
        proposals = backend.propose_layout(prompts, bg.pixels, fg_images)
        if len(proposals) != len(character_ids):
            last_violations = [
                f"expected {len(character_ids)} proposals, got {len(proposals)}"
            ]
            continue
        violations = [
            f"{cid}: {problem}"
            for cid, bbox in zip(character_ids, proposals)
            for problem in validate_layout(bbox, min_area)
        ]
        if not violations:
            return [
                Layout(
                    scene_index=layered.scene_index,
                    character_id=cid,
                    bbox=tuple(float(v) for v in bbox),
                    z_order=rank,
                )
                for rank, (cid, bbox) in enumerate(zip(character_ids, proposals))
            ]
        last_violations = violations
    raise LayoutInvalid("; ".join(last_violations))

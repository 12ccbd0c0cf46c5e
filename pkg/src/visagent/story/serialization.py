"""Distillation document serialization (the --emit-distillation format)."""

from __future__ import annotations

from typing import Any

from ..errors import ParseError
from .types import (
    Act,
    CharacterDescription,
    LayeredPrompts,
    ReflectionEntry,
    ReflectionReport,
    SceneDescription,
    Story,
    StoryDistillation,
)

DISTILLATION_FORMAT = "visagent-distillation/v1"


def distillation_to_dict(distillation: StoryDistillation) -> dict[str, Any]:
    return {
        "format": DISTILLATION_FORMAT,
        "story": {"text": distillation.story.text, "title": distillation.story.title},
        "scenes": [
            {
                "scene_index": s.scene_index,
                "act": s.act.value,
                "summary": s.summary,
                "source_span": list(s.source_span),
                "character_refs": list(s.character_refs),
            }
            for s in distillation.scenes
        ],
        "characters": [
            {
                "character_id": c.character_id,
                "name": c.name,
                "attributes": dict(c.attributes),
                "attire_inferred": c.attire_inferred,
            }
            for c in distillation.characters
        ],
        "prompts": [
            {
                "scene_index": p.scene_index,
                "bg_prompt": p.bg_prompt,
                "fg_prompts": dict(p.fg_prompts),
                "global_prompt": p.global_prompt,
            }
            for p in distillation.prompts
        ],
        "reflection": {
            "threshold": distillation.report.threshold,
            "entries": [
                {
                    "scene_index": e.scene_index,
                    "similarity_score": e.similarity_score,
                    "deviation_notes": list(e.deviation_notes),
                    "passed": e.passed,
                }
                for e in distillation.report.entries
            ],
        },
    }


def distillation_from_dict(doc: dict[str, Any]) -> StoryDistillation:
    if doc.get("format") != DISTILLATION_FORMAT:
        raise ParseError(f"expected a {DISTILLATION_FORMAT!r} document")
    return StoryDistillation(
        story=Story(text=doc["story"]["text"], title=doc["story"].get("title")),
        scenes=tuple(
            SceneDescription(
                scene_index=s["scene_index"],
                act=Act(s["act"]),
                summary=s["summary"],
                source_span=tuple(s["source_span"]),
                character_refs=tuple(s["character_refs"]),
            )
            for s in doc["scenes"]
        ),
        characters=tuple(
            CharacterDescription(
                character_id=c["character_id"],
                name=c["name"],
                attributes=c["attributes"],
                attire_inferred=c["attire_inferred"],
            )
            for c in doc["characters"]
        ),
        prompts=tuple(
            LayeredPrompts(
                scene_index=p["scene_index"],
                bg_prompt=p["bg_prompt"],
                fg_prompts=p["fg_prompts"],
                global_prompt=p["global_prompt"],
            )
            for p in doc["prompts"]
        ),
        report=ReflectionReport(
            entries=tuple(
                ReflectionEntry(
                    scene_index=e["scene_index"],
                    similarity_score=e["similarity_score"],
                    deviation_notes=tuple(e["deviation_notes"]),
                    passed=e["passed"],
                )
                for e in doc["reflection"]["entries"]
            ),
            threshold=doc["reflection"]["threshold"],
        ),
    )

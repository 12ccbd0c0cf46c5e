"""Benchmark file loading: native shape plus a CMIGBench-like alternative."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from ..errors import ParseError, SchemaError

BENCHMARK_FORMAT = "visagent-benchmark/v1"

# Field mapping applied to the CMIGBench-like shape: a top-level object of
# story-id -> scene list, each scene {"background": str, "objects":
# [[name, caption, bbox-or-null], ...]}.
CMIG_FIELD_MAP = {
    "background": "bg_prompt",
    "objects": "fg",
    "object_name": "character_id",
    "object_caption": "prompt",
    "object_box": "bbox",
}


@dataclass(frozen=True)
class ForegroundSpec:
    character_id: str
    prompt: str
    bbox: tuple[float, float, float, float] | None = None


@dataclass(frozen=True)
class BenchmarkScene:
    bg_prompt: str
    fg: tuple[ForegroundSpec, ...] = ()


@dataclass(frozen=True)
class BenchmarkCase:
    story_id: str
    characters: tuple[str, ...]
    scenes: tuple[BenchmarkScene, ...]


def _parse_fg(doc: dict[str, Any], case_id: str) -> ForegroundSpec:
    cid = str(doc.get("character_id", "")).strip()
    prompt = str(doc.get("prompt", "")).strip()
    if not cid or not prompt:
        raise SchemaError(f"case {case_id!r}: fg entries need character_id and prompt")
    bbox = doc.get("bbox")
    return ForegroundSpec(
        character_id=cid,
        prompt=prompt,
        bbox=tuple(float(v) for v in bbox) if bbox else None,
    )


def _validate_case(case: BenchmarkCase) -> None:
    if not case.scenes:
        raise SchemaError(f"case {case.story_id!r} has no scenes")
    known = set(case.characters)
    for scene in case.scenes:
        if not scene.bg_prompt.strip():
            raise SchemaError(f"case {case.story_id!r} has an empty bg prompt")
        for fg in scene.fg:
            if fg.character_id not in known:
                raise SchemaError(
                    f"case {case.story_id!r} references undefined character "
                    f"{fg.character_id!r}"
                )


def _parse_native(doc: dict[str, Any]) -> list[BenchmarkCase]:
    cases = []
    for raw in doc.get("cases", []):
        story_id = str(raw.get("story_id", "")).strip()
        if not story_id:
            raise SchemaError("every case needs a story_id")
        scenes = tuple(
            BenchmarkScene(
                bg_prompt=str(scene.get("bg_prompt", "")),
                fg=tuple(_parse_fg(f, story_id) for f in scene.get("fg", [])),
            )
            for scene in raw.get("scenes", [])
        )
        case = BenchmarkCase(
            story_id=story_id,
            characters=tuple(raw.get("characters", [])),
            scenes=scenes,
        )
        _validate_case(case)
        cases.append(case)
    return cases


def _parse_cmig_like(doc: dict[str, Any]) -> list[BenchmarkCase]:
    cases = []
    for story_id, scene_list in doc.items():
        if not isinstance(scene_list, list):
            raise SchemaError(f"story {story_id!r}: expected a scene list")
        scenes = []
        characters: list[str] = []
        for scene in scene_list:
            fg_specs = []
            for obj in scene.get("objects", []):
                name, caption = str(obj[0]), str(obj[1])
                bbox = obj[2] if len(obj) > 2 and obj[2] else None
                fg_specs.append(
                    ForegroundSpec(
                        character_id=name,
                        prompt=caption,
                        bbox=tuple(float(v) for v in bbox) if bbox else None,
                    )
                )
                if name not in characters:
                    characters.append(name)
            scenes.append(
                BenchmarkScene(bg_prompt=str(scene.get("background", "")), fg=tuple(fg_specs))
            )
        case = BenchmarkCase(
            story_id=str(story_id), characters=tuple(characters), scenes=tuple(scenes)
        )
        _validate_case(case)
        cases.append(case)
    return cases


def load_benchmark(path: str | Path) -> list[BenchmarkCase]:
    """Load and validate a benchmark file in either supported shape."""
    raw = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ParseError(f"benchmark file {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError(f"benchmark file {path} must hold a JSON object")
    if doc.get("format") == BENCHMARK_FORMAT:
        return _parse_native(doc)
    if "cases" in doc or "format" in doc:
        raise SchemaError(f"unrecognized benchmark format {doc.get('format')!r}")
    return _parse_cmig_like(doc)

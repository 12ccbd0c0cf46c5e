"""Domain types for story distillation.

Everything here is an immutable value; construction validates the type's
own invariants, and the cross-object invariants (index completeness,
character closure, act ordering) live in the ``validate_*`` helpers so
feedback patches can re-check them atomically.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Iterable, Mapping

from ..errors import InvariantViolation


class Act(str, Enum):
    SETUP = "setup"
    CONFLICT = "conflict"
    RESOLUTION = "resolution"


_ACT_ORDER = {Act.SETUP: 0, Act.CONFLICT: 1, Act.RESOLUTION: 2}


@dataclass(frozen=True)
class Story:
    text: str
    title: str | None = None

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise InvariantViolation("story text is empty")


@dataclass(frozen=True)
class InstructionSet:
    """Agent-role identifier -> instruction text."""

    entries: Mapping[str, str]

    def for_role(self, role: str) -> str:
        instruction = self.entries.get(role, "")
        if not instruction:
            raise InvariantViolation(f"no instruction registered for role {role!r}")
        return instruction

    def merged_with(self, other: "InstructionSet") -> "InstructionSet":
        return InstructionSet(entries={**self.entries, **other.entries})


@dataclass(frozen=True)
class CharacterCategorySchema:
    keys: tuple[str, ...] = ("appearance", "attire", "gender")

    REQUIRED = ("attire", "gender")

    def __post_init__(self) -> None:
        if len(set(self.keys)) != len(self.keys):
            raise InvariantViolation("schema keys must be unique")
        missing = [k for k in self.REQUIRED if k not in self.keys]
        if missing:
            raise InvariantViolation(f"schema must always include {missing}")


@dataclass(frozen=True)
class DistillationConfig:
    num_scenes: int = 5
    instruction_set: InstructionSet | None = None
    category_schema: CharacterCategorySchema = field(default_factory=CharacterCategorySchema)
    separator: str = ", "
    bg_style_suffix: str = "highres, detailed, soft lighting, daytime"
    reflection_threshold: float = 0.6
    schema_retries: int = 2

    def __post_init__(self) -> None:
        if self.num_scenes < 1:
            raise InvariantViolation("num_scenes must be >= 1")

    def instructions(self) -> InstructionSet:
        from .instructions import DEFAULT_STORY_INSTRUCTIONS

        return self.instruction_set or DEFAULT_STORY_INSTRUCTIONS


@dataclass(frozen=True)
class SceneDescription:
    scene_index: int
    act: Act
    summary: str
    source_span: tuple[int, int]
    character_refs: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.scene_index < 0:
            raise InvariantViolation("scene_index must be non-negative")
        if not self.summary.strip():
            raise InvariantViolation(f"scene {self.scene_index} summary is empty")
        start, end = self.source_span
        if start < 0 or end < start:
            raise InvariantViolation(f"scene {self.scene_index} has invalid span {self.source_span}")


@dataclass(frozen=True)
class CharacterDescription:
    character_id: str
    name: str
    attributes: Mapping[str, str]
    attire_inferred: bool = False

    def __post_init__(self) -> None:
        if not self.character_id:
            raise InvariantViolation("character_id is empty")

    def validated_against(self, schema: CharacterCategorySchema) -> "CharacterDescription":
        missing = [k for k in schema.keys if not str(self.attributes.get(k, "")).strip()]
        if missing:
            raise InvariantViolation(
                f"character {self.character_id!r} missing schema attributes {missing}"
            )
        return self

    def appearance_clause(self) -> str:
        """Canonical appearance text injected into every FG prompt.

        String-identical across scenes of a run by construction.
        """
        attire = str(self.attributes.get("attire", "")).strip()
        base = str(self.attributes.get("appearance", "")).strip() or self.name
        if attire:
            return f"{base} with {attire}"
        return base


@dataclass(frozen=True)
class LayeredPrompts:
    scene_index: int
    bg_prompt: str
    fg_prompts: Mapping[str, str]
    global_prompt: str

    def __post_init__(self) -> None:
        if not self.bg_prompt.strip():
            raise InvariantViolation(f"scene {self.scene_index} bg_prompt is empty")
        for cid, text in self.fg_prompts.items():
            if not text.strip():
                raise InvariantViolation(f"scene {self.scene_index} fg_prompt for {cid!r} is empty")


class EditTarget(str, Enum):
    SCENE = "scene"
    CHARACTER = "character"


class Verdict(str, Enum):
    APPROVE = "approve"
    MODIFY = "modify"
    REGENERATE = "regenerate"


@dataclass(frozen=True)
class FeedbackEdit:
    target: EditTarget
    target_id: int | str
    verdict: Verdict
    patched_fields: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.verdict == Verdict.APPROVE and self.patched_fields:
            raise InvariantViolation("approve edits must carry no patched fields")


@dataclass(frozen=True)
class ReflectionEntry:
    scene_index: int
    similarity_score: float
    deviation_notes: tuple[str, ...]
    passed: bool


@dataclass(frozen=True)
class ReflectionReport:
    entries: tuple[ReflectionEntry, ...]
    threshold: float

    def all_passed(self) -> bool:
        return all(e.passed for e in self.entries)


@dataclass(frozen=True)
class StoryDistillation:
    """Complete story-module output: scenes, characters, prompts, report."""

    story: Story
    scenes: tuple[SceneDescription, ...]
    characters: tuple[CharacterDescription, ...]
    prompts: tuple[LayeredPrompts, ...]
    report: ReflectionReport

    def character_by_id(self, character_id: str) -> CharacterDescription:
        for character in self.characters:
            if character.character_id == character_id:
                return character
        raise InvariantViolation(f"unknown character id {character_id!r}")


def slugify_name(name: str, taken: Iterable[str] = ()) -> str:
    """Stable id from a first mention; numeric suffix on collision."""
    slug = re.sub(r"[^a-z0-9]+", "_", name.lower()).strip("_")
    slug = re.sub(r"^(the|a|an)_", "", slug) or "character"
    taken_set = set(taken)
    if slug not in taken_set:
        return slug
    counter = 2
    while f"{slug}_{counter}" in taken_set:
        counter += 1
    return f"{slug}_{counter}"


def validate_scenes(
    scenes: Iterable[SceneDescription],
    num_scenes: int,
    characters: Iterable[CharacterDescription] = (),
) -> None:
    """Cross-scene invariants: index completeness, act ordering, ref closure."""
    ordered = sorted(scenes, key=lambda s: s.scene_index)
    indices = [s.scene_index for s in ordered]
    if indices != list(range(num_scenes)):
        raise InvariantViolation(
            f"scene indices {indices} do not cover 0..{num_scenes - 1} exactly"
        )
    ranks = [_ACT_ORDER[s.act] for s in ordered]
    if any(a > b for a, b in zip(ranks, ranks[1:])):
        raise InvariantViolation("act sequence decreases in narrative order")
    known = {c.character_id for c in characters}
    for scene in ordered:
        dangling = [cid for cid in scene.character_refs if cid not in known]
        if dangling:
            raise InvariantViolation(
                f"scene {scene.scene_index} references unregistered characters {dangling}"
            )


def validate_characters(
    characters: Iterable[CharacterDescription], schema: CharacterCategorySchema
) -> None:
    seen: set[str] = set()
    for character in characters:
        if character.character_id in seen:
            raise InvariantViolation(f"duplicate character id {character.character_id!r}")
        seen.add(character.character_id)
        character.validated_against(schema)


def patched(value: Any, patched_fields: Mapping[str, Any]) -> Any:
    """Apply a partial field map to a frozen dataclass, verbatim."""
    try:
        return replace(value, **dict(patched_fields))
    except TypeError as exc:
        raise InvariantViolation(f"unknown field in patch: {exc}") from exc

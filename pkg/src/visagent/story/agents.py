"""Story-module agents: scene/character extraction, feedback, prompts, reflection."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from ..backends.base import EmbeddingBackend, TextModelBackend, complete_with_retry
from ..backends.mock_text import (
    ROLE_CHARACTER_EXTRACTION,
    ROLE_PROMPT_GENERATION,
    ROLE_REFLECTION,
    ROLE_SCENE_EXTRACTION,
)
from ..errors import InvariantViolation, MissingCharacter, SchemaError, UnknownTarget
from .types import (
    Act,
    CharacterCategorySchema,
    CharacterDescription,
    DistillationConfig,
    EditTarget,
    FeedbackEdit,
    InstructionSet,
    LayeredPrompts,
    ReflectionEntry,
    ReflectionReport,
    SceneDescription,
    Story,
    Verdict,
    patched,
    slugify_name,
    validate_characters,
    validate_scenes,
)


def allocate_acts(num_scenes: int) -> list[Act]:
    """Three-act allocation: equal thirds, remainder to the earlier acts.

    Yields (2, 2, 1) for five scenes and keeps every act populated once
    num_scenes reaches three.
    """
    base, extra = divmod(num_scenes, 3)
    counts = [base + (1 if i < extra else 0) for i in range(3)]
    acts: list[Act] = []
    for act, count in zip((Act.SETUP, Act.CONFLICT, Act.RESOLUTION), counts):
        acts.extend([act] * count)
    return acts


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise SchemaError(message)


def _validate_scene_doc(reply: dict[str, Any], num_scenes: int, text_length: int) -> None:
    _require(isinstance(reply, dict) and isinstance(reply.get("scenes"), list), "reply must carry a 'scenes' list")
    scenes = reply["scenes"]
    _require(len(scenes) == num_scenes, f"expected {num_scenes} scenes, got {len(scenes)}")
    for i, scene in enumerate(scenes):
        _require(isinstance(scene, dict), f"scene {i} is not an object")
        _require(bool(str(scene.get("summary", "")).strip()), f"scene {i} summary empty")
        span = scene.get("source_span")
        _require(
            isinstance(span, (list, tuple)) and len(span) == 2,
            f"scene {i} source_span must be [start, end]",
        )
        start, end = span
        _require(
            isinstance(start, int) and isinstance(end, int) and 0 <= start <= end <= text_length,
            f"scene {i} span {span} outside story bounds",
        )


def extract_scenes(
    story: Story, config: DistillationConfig, backend: TextModelBackend
) -> list[SceneDescription]:
    """Distill the story into exactly num_scenes act-labelled descriptions."""
    instruction = config.instructions().for_role(ROLE_SCENE_EXTRACTION)
    payload = {"story": story.text, "num_scenes": config.num_scenes}
    reply = complete_with_retry(
        backend,
        ROLE_SCENE_EXTRACTION,
        instruction,
        payload,
        validator=lambda doc: _validate_scene_doc(doc, config.num_scenes, len(story.text)),
        retries=config.schema_retries,
    )
    acts = allocate_acts(config.num_scenes)
    scenes = [
        SceneDescription(
            scene_index=i,
            act=acts[i],
            summary=str(doc["summary"]).strip(),
            source_span=(int(doc["source_span"][0]), int(doc["source_span"][1])),
        )
        for i, doc in enumerate(reply["scenes"])
    ]
    validate_scenes(scenes, config.num_scenes)
    return scenes


def regenerate_scene(
    story: Story,
    config: DistillationConfig,
    backend: TextModelBackend,
    scene_index: int,
    attempt: int,
) -> SceneDescription:
    instruction = config.instructions().for_role(ROLE_SCENE_EXTRACTION)
    payload = {
        "story": story.text,
        "num_scenes": config.num_scenes,
        "target_scene": scene_index,
        "attempt": attempt,
    }

    def check(doc: dict[str, Any]) -> None:
        _require(isinstance(doc.get("scene"), dict), "reply must carry a 'scene' object")
        _validate_scene_doc({"scenes": [doc["scene"]]}, 1, len(story.text))

    reply = complete_with_retry(
        backend, ROLE_SCENE_EXTRACTION, instruction, payload, check, config.schema_retries
    )
    doc = reply["scene"]
    return SceneDescription(
        scene_index=scene_index,
        act=allocate_acts(config.num_scenes)[scene_index],
        summary=str(doc["summary"]).strip(),
        source_span=(int(doc["source_span"][0]), int(doc["source_span"][1])),
    )


def _validate_character_doc(reply: dict[str, Any], schema: CharacterCategorySchema) -> None:
    _require(
        isinstance(reply, dict) and isinstance(reply.get("characters"), list),
        "reply must carry a 'characters' list",
    )
    for i, character in enumerate(reply["characters"]):
        _validate_single_character(character, schema, f"character {i}")


def _validate_single_character(character: Any, schema: CharacterCategorySchema, label: str) -> None:
    _require(isinstance(character, dict), f"{label} is not an object")
    _require(bool(str(character.get("name", "")).strip()), f"{label} name empty")
    attributes = character.get("attributes")
    _require(isinstance(attributes, dict), f"{label} attributes missing")
    for key in schema.keys:
        _require(bool(str(attributes.get(key, "")).strip()), f"{label} missing attribute {key!r}")
    _require(isinstance(character.get("attire_stated"), bool), f"{label} attire_stated missing")


def extract_characters(
    story: Story,
    schema: CharacterCategorySchema,
    backend: TextModelBackend,
    instruction_set: InstructionSet | None = None,
    retries: int = 2,
) -> list[CharacterDescription]:
    """Register every acting character with all schema attributes filled."""
    from .instructions import DEFAULT_STORY_INSTRUCTIONS

    instructions = instruction_set or DEFAULT_STORY_INSTRUCTIONS
    instruction = instructions.for_role(ROLE_CHARACTER_EXTRACTION)
    payload = {"story": story.text, "schema": list(schema.keys)}
    reply = complete_with_retry(
        backend,
        ROLE_CHARACTER_EXTRACTION,
        instruction,
        payload,
        validator=lambda doc: _validate_character_doc(doc, schema),
        retries=retries,
    )
    characters: list[CharacterDescription] = []
    taken: list[str] = []
    for doc in reply["characters"]:
        cid = slugify_name(str(doc["name"]), taken)
        taken.append(cid)
        characters.append(
            CharacterDescription(
                character_id=cid,
                name=str(doc["name"]).strip(),
                attributes={k: str(v) for k, v in doc["attributes"].items()},
                attire_inferred=not bool(doc["attire_stated"]),
            )
        )
    validate_characters(characters, schema)
    return characters


def regenerate_character(
    story: Story,
    schema: CharacterCategorySchema,
    backend: TextModelBackend,
    character: CharacterDescription,
    attempt: int,
    instruction_set: InstructionSet | None = None,
    retries: int = 2,
) -> CharacterDescription:
    from .instructions import DEFAULT_STORY_INSTRUCTIONS

    instructions = instruction_set or DEFAULT_STORY_INSTRUCTIONS
    instruction = instructions.for_role(ROLE_CHARACTER_EXTRACTION)
    payload = {
        "story": story.text,
        "schema": list(schema.keys),
        "target": character.name,
        "attempt": attempt,
    }

    def check(doc: dict[str, Any]) -> None:
        _require(isinstance(doc.get("character"), dict), "reply must carry a 'character' object")
        _validate_single_character(doc["character"], schema, "character")

    reply = complete_with_retry(
        backend, ROLE_CHARACTER_EXTRACTION, instruction, payload, check, retries
    )
    doc = reply["character"]
    return CharacterDescription(
        character_id=character.character_id,
        name=str(doc["name"]).strip(),
        attributes={k: str(v) for k, v in doc["attributes"].items()},
        attire_inferred=not bool(doc["attire_stated"]),
    )


def _mention_patterns(character: CharacterDescription) -> list[re.Pattern[str]]:
    names = {character.name}
    stripped = re.sub(r"^(?:the|a|an)\s+", "", character.name, flags=re.IGNORECASE)
    names.add(stripped)
    return [
        re.compile(rf"\b{re.escape(name)}\b", re.IGNORECASE) for name in names if name.strip()
    ]


def link_character_refs(
    scenes: Sequence[SceneDescription],
    characters: Sequence[CharacterDescription],
    story: Story,
) -> list[SceneDescription]:
    """Fill character_refs by first-mention order within each scene's text."""
    linked: list[SceneDescription] = []
    for scene in scenes:
        start, end = scene.source_span
        haystacks = (story.text[start:end], scene.summary)
        mentions: list[tuple[int, int, str]] = []
        for order, character in enumerate(characters):
            best: int | None = None
            for rank, text in enumerate(haystacks):
                for pattern in _mention_patterns(character):
                    match = pattern.search(text)
                    if match:
                        pos = rank * 1_000_000 + match.start()
                        best = pos if best is None else min(best, pos)
            if best is not None:
                mentions.append((best, order, character.character_id))
        refs = tuple(cid for _, _, cid in sorted(mentions))
        linked.append(patched(scene, {"character_refs": refs}))
    return linked


@dataclass
class FeedbackResult:
    scenes: list[SceneDescription]
    characters: list[CharacterDescription]
    regenerate: list[tuple[EditTarget, int | str]] = field(default_factory=list)

    @property
    def approved(self) -> bool:
        return not self.regenerate


def apply_feedback(
    scenes: Sequence[SceneDescription],
    characters: Sequence[CharacterDescription],
    edits: Sequence[FeedbackEdit],
    schema: CharacterCategorySchema,
) -> FeedbackResult:
    """Apply confirm/modify/regenerate verdicts atomically.

    Modifications are applied verbatim and every type invariant is
    re-checked; any violation rejects the whole edit batch.
    """
    scene_by_index = {s.scene_index: s for s in scenes}
    char_by_id = {c.character_id: c for c in characters}
    regenerate: list[tuple[EditTarget, int | str]] = []
    for edit in edits:
        if edit.target == EditTarget.SCENE:
            if edit.target_id not in scene_by_index:
                raise UnknownTarget(f"no scene with index {edit.target_id!r}")
            if edit.verdict == Verdict.MODIFY:
                scene_by_index[edit.target_id] = patched(  # type: ignore[index]
                    scene_by_index[edit.target_id], edit.patched_fields
                )
            elif edit.verdict == Verdict.REGENERATE:
                regenerate.append((EditTarget.SCENE, edit.target_id))
        else:
            if edit.target_id not in char_by_id:
                raise UnknownTarget(f"no character with id {edit.target_id!r}")
            if edit.verdict == Verdict.MODIFY:
                char_by_id[edit.target_id] = patched(
                    char_by_id[edit.target_id], edit.patched_fields
                )
            elif edit.verdict == Verdict.REGENERATE:
                regenerate.append((EditTarget.CHARACTER, edit.target_id))

    new_scenes = [scene_by_index[i] for i in sorted(scene_by_index)]
    new_characters = [char_by_id[c.character_id] for c in characters]
    validate_scenes(new_scenes, len(new_scenes), new_characters)
    validate_characters(new_characters, schema)
    return FeedbackResult(scenes=new_scenes, characters=new_characters, regenerate=regenerate)


def compose_global_prompt(layered: LayeredPrompts, separator: str = ", ") -> str:
    """BG prompt followed by FG prompts in character order; deterministic."""
    return compose_global_parts(layered.bg_prompt, layered.fg_prompts.values(), separator)


def compose_global_parts(bg_prompt: str, fg_prompts: Any, separator: str = ", ") -> str:
    return separator.join([bg_prompt, *fg_prompts])


def generate_layered_prompts(
    scenes: Sequence[SceneDescription],
    characters: Sequence[CharacterDescription],
    instruction_set: InstructionSet,
    backend: TextModelBackend,
    separator: str = ", ",
    bg_style_suffix: str = "",
    retries: int = 2,
) -> list[LayeredPrompts]:
    """One LayeredPrompts per scene with the canonical appearance clause
    injected into every FG prompt."""
    char_by_id = {c.character_id: c for c in characters}
    instruction = instruction_set.for_role(ROLE_PROMPT_GENERATION)
    prompts: list[LayeredPrompts] = []
    for scene in scenes:
        missing = [cid for cid in scene.character_refs if cid not in char_by_id]
        if missing:
            raise MissingCharacter(f"scene {scene.scene_index} references {missing}")
        cast = [
            {
                "character_id": cid,
                "name": char_by_id[cid].name,
                "attributes": dict(char_by_id[cid].attributes),
            }
            for cid in scene.character_refs
        ]
        payload = {"scene_index": scene.scene_index, "summary": scene.summary, "characters": cast}

        def check(doc: dict[str, Any], refs: tuple[str, ...] = scene.character_refs) -> None:
            _require(isinstance(doc, dict) and bool(str(doc.get("bg", "")).strip()), "bg prompt empty")
            actions = doc.get("actions")
            _require(isinstance(actions, dict), "actions map missing")
            for cid in refs:
                _require(bool(str(actions.get(cid, "")).strip()), f"no action for {cid!r}")

        reply = complete_with_retry(
            backend, ROLE_PROMPT_GENERATION, instruction, payload, check, retries
        )
        bg = str(reply["bg"]).strip()
        if bg_style_suffix:
            bg = f"{bg}{separator}{bg_style_suffix}"
        fg_prompts = {
            cid: f"{char_by_id[cid].appearance_clause()}{separator}{str(reply['actions'][cid]).strip()}"
            for cid in scene.character_refs
        }
        prompts.append(
            LayeredPrompts(
                scene_index=scene.scene_index,
                bg_prompt=bg,
                fg_prompts=fg_prompts,
                global_prompt=compose_global_parts(bg, fg_prompts.values(), separator),
            )
        )
    return prompts


def reflect(
    prompts: Sequence[LayeredPrompts],
    scenes: Sequence[SceneDescription],
    story: Story,
    backend: TextModelBackend,
    embedder: EmbeddingBackend,
    threshold: float = 0.6,
    instruction_set: InstructionSet | None = None,
    retries: int = 2,
) -> ReflectionReport:
    """Score each scene's prompt against its story segment; never mutates prompts.

    Similarity is the embedding cosine clamped to [0, 1]; the text backend
    contributes deviation notes, any of which may be blocking.
    """
    from .instructions import DEFAULT_STORY_INSTRUCTIONS

    if len(prompts) != len(scenes):
        raise InvariantViolation("prompts and scenes must be index-aligned")
    instructions = instruction_set or DEFAULT_STORY_INSTRUCTIONS
    instruction = instructions.for_role(ROLE_REFLECTION)
    entries: list[ReflectionEntry] = []
    for layered, scene in zip(prompts, scenes):
        if layered.scene_index != scene.scene_index:
            raise InvariantViolation("prompts and scenes must be index-aligned")
        start, end = scene.source_span
        segment = story.text[start:end].strip() or scene.summary
        cosine = float(np.dot(embedder.embed(layered.global_prompt), embedder.embed(segment)))
        score = max(0.0, min(1.0, cosine))
        payload = {
            "scene_index": scene.scene_index,
            "prompt": layered.global_prompt,
            "segment": segment,
        }

        def check(doc: dict[str, Any]) -> None:
            notes = doc.get("deviation_notes")
            _require(isinstance(notes, list), "deviation_notes list missing")
            for note in notes:
                _require(
                    isinstance(note, dict) and bool(str(note.get("note", "")).strip()),
                    "each deviation note needs text",
                )

        reply = complete_with_retry(backend, ROLE_REFLECTION, instruction, payload, check, retries)
        notes = [str(n["note"]) for n in reply["deviation_notes"]]
        blocking = any(bool(n.get("blocking")) for n in reply["deviation_notes"])
        if score < threshold and not notes:
            notes.append(
                f"similarity {score:.2f} below threshold {threshold:.2f} for scene {scene.scene_index}"
            )
        entries.append(
            ReflectionEntry(
                scene_index=scene.scene_index,
                similarity_score=score,
                deviation_notes=tuple(notes),
                passed=score >= threshold and not blocking,
            )
        )
    return ReflectionReport(entries=tuple(entries), threshold=threshold)

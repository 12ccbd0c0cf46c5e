"""One-shot story-module run: extraction, feedback gate, prompts, reflection."""

from __future__ import annotations

import queue
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Protocol, Sequence

from ..backends import BackendSet
from ..errors import FeedbackTimeout
from ..events import EventLog
from .agents import (
    apply_feedback,
    extract_characters,
    extract_scenes,
    generate_layered_prompts,
    link_character_refs,
    reflect,
    regenerate_character,
    regenerate_scene,
)
from .types import (
    CharacterDescription,
    DistillationConfig,
    EditTarget,
    FeedbackEdit,
    SceneDescription,
    Story,
    StoryDistillation,
)


class FeedbackChannel(Protocol):
    """One writer (the user) and one reader (the pipeline) per gate."""

    def wait_for_feedback(
        self, gate: str, payload: dict[str, Any], timeout: float | None
    ) -> Sequence[Any]:
        """Block until a decision arrives; an empty sequence approves all."""


class AutoApproveChannel:
    """Closes every gate immediately; required for headless runs."""

    def wait_for_feedback(
        self, gate: str, payload: dict[str, Any], timeout: float | None
    ) -> Sequence[Any]:
        return ()


class QueueFeedbackChannel:
    """Scripted decisions for tests; approves once the queue runs dry."""

    def __init__(self, responses: Sequence[Sequence[Any]] = ()) -> None:
        self._queue: queue.Queue = queue.Queue()
        for response in responses:
            self._queue.put(list(response))
        self.offers: list[tuple[str, dict[str, Any]]] = []

    def put(self, response: Sequence[Any]) -> None:
        self._queue.put(list(response))

    def wait_for_feedback(
        self, gate: str, payload: dict[str, Any], timeout: float | None
    ) -> Sequence[Any]:
        self.offers.append((gate, payload))
        try:
            return self._queue.get_nowait()
        except queue.Empty:
            return ()


class BlockingFeedbackChannel:
    """Thread-safe channel whose reader blocks until the writer responds."""

    def __init__(self) -> None:
        self._queue: queue.Queue = queue.Queue()

    def respond(self, edits: Sequence[Any]) -> None:
        self._queue.put(list(edits))

    def wait_for_feedback(
        self, gate: str, payload: dict[str, Any], timeout: float | None
    ) -> Sequence[Any]:
        try:
            return self._queue.get(timeout=timeout)
        except queue.Empty:
            raise FeedbackTimeout(f"gate {gate!r} expired after {timeout}s") from None


def _extract_both(
    story: Story, config: DistillationConfig, backends: BackendSet
) -> tuple[list[SceneDescription], list[CharacterDescription]]:
    """Scenes and characters have independent inputs, so they may run
    concurrently when the text backend tolerates it."""
    if backends.text.descriptor.concurrency_safe:
        with ThreadPoolExecutor(max_workers=2) as pool:
            scenes_future = pool.submit(extract_scenes, story, config, backends.text)
            characters_future = pool.submit(
                extract_characters,
                story,
                config.category_schema,
                backends.text,
                config.instructions(),
                config.schema_retries,
            )
            return scenes_future.result(), characters_future.result()
    scenes = extract_scenes(story, config, backends.text)
    characters = extract_characters(
        story, config.category_schema, backends.text, config.instructions(), config.schema_retries
    )
    return scenes, characters


def descriptions_gate_payload(
    scenes: Sequence[SceneDescription], characters: Sequence[CharacterDescription]
) -> dict[str, Any]:
    return {
        "gate": "descriptions",
        "scenes": [
            {"scene_index": s.scene_index, "act": s.act.value, "summary": s.summary}
            for s in scenes
        ],
        "characters": [
            {"character_id": c.character_id, "name": c.name, "attributes": dict(c.attributes)}
            for c in characters
        ],
    }


def run_feedback_round(
    story: Story,
    config: DistillationConfig,
    backends: BackendSet,
    scenes: list[SceneDescription],
    characters: list[CharacterDescription],
    edits: Sequence[FeedbackEdit],
    attempts: dict[str, int],
    events: EventLog,
) -> tuple[list[SceneDescription], list[CharacterDescription], bool]:
    """Apply one batch of edits; returns (scenes, characters, approved)."""
    if not edits:
        return scenes, characters, True
    result = apply_feedback(scenes, characters, edits, config.category_schema)
    scenes, characters = result.scenes, result.characters
    for target, target_id in result.regenerate:
        key = f"{target.value}:{target_id}"
        attempts[key] = attempts.get(key, 0) + 1
        if target == EditTarget.SCENE:
            fresh_scene = regenerate_scene(story, config, backends.text, int(target_id), attempts[key])
            scenes = [fresh_scene if s.scene_index == target_id else s for s in scenes]
        else:
            current = next(c for c in characters if c.character_id == target_id)
            fresh = regenerate_character(
                story,
                config.category_schema,
                backends.text,
                current,
                attempts[key],
                config.instructions(),
                config.schema_retries,
            )
            characters = [fresh if c.character_id == target_id else c for c in characters]
        events.append("regeneration", target=target.value, target_id=target_id, attempt=attempts[key])
    scenes = link_character_refs(scenes, characters, story)
    return scenes, characters, result.approved


def run_story_module(
    story: Story,
    config: DistillationConfig,
    backends: BackendSet,
    feedback_channel: FeedbackChannel | None = None,
    events: EventLog | None = None,
    feedback_timeout: float | None = None,
) -> StoryDistillation:
    """Full distillation: extract (in parallel), gate, prompt, reflect.

    Blocks at the descriptions gate until the channel approves; every
    intermediate lands in the event log. Deterministic given deterministic
    backends.
    """
    channel = feedback_channel or AutoApproveChannel()
    events = events if events is not None else EventLog()

    scenes, characters = _extract_both(story, config, backends)
    scenes = link_character_refs(scenes, characters, story)
    events.append("scenes_extracted", count=len(scenes))
    events.append("characters_extracted", count=len(characters))

    attempts: dict[str, int] = {}
    while True:
        events.append("descriptions_gate_opened")
        edits = channel.wait_for_feedback(
            "descriptions", descriptions_gate_payload(scenes, characters), feedback_timeout
        )
        scenes, characters, approved = run_feedback_round(
            story, config, backends, scenes, characters, list(edits), attempts, events
        )
        events.append("descriptions_feedback", edits=len(list(edits)), approved=approved)
        if approved:
            break

    prompts = generate_layered_prompts(
        scenes,
        characters,
        config.instructions(),
        backends.text,
        separator=config.separator,
        bg_style_suffix=config.bg_style_suffix,
        retries=config.schema_retries,
    )
    events.append("prompts_generated", count=len(prompts))

    report = reflect(
        prompts,
        scenes,
        story,
        backends.text,
        backends.embedding,
        threshold=config.reflection_threshold,
        instruction_set=config.instructions(),
        retries=config.schema_retries,
    )
    events.append("reflection_completed", passed=report.all_passed())

    return StoryDistillation(
        story=story,
        scenes=tuple(scenes),
        characters=tuple(characters),
        prompts=tuple(prompts),
        report=report,
    )

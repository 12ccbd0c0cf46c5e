"""Run lifecycle state: phases, the transition graph, and approval events."""

from __future__ import annotations

import time
import uuid
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

from ..config import RunConfig
from ..errors import InvariantViolation
from ..events import EventLog
from ..image.pipeline import ElementVerdict
from ..image.types import SceneAssembly, SubjectStorage
from ..story.types import (
    CharacterDescription,
    EditTarget,
    FeedbackEdit,
    LayeredPrompts,
    ReflectionReport,
    SceneDescription,
    Story,
    Verdict,
)


class Phase(str, Enum):
    DISTILLING = "distilling"
    AWAITING_DESCRIPTION_FEEDBACK = "awaiting_description_feedback"
    PROMPTING = "prompting"
    REFLECTING = "reflecting"
    ELEMENT_GENERATION = "element_generation"
    AWAITING_ELEMENT_APPROVAL = "awaiting_element_approval"
    LOCATING = "locating"
    STITCHING = "stitching"
    RENDERING = "rendering"
    EVALUATING = "evaluating"
    DONE = "done"
    FAILED = "failed"


GATE_PHASES = {Phase.AWAITING_DESCRIPTION_FEEDBACK, Phase.AWAITING_ELEMENT_APPROVAL}
TERMINAL_PHASES = {Phase.DONE, Phase.FAILED}

# The declared state graph; every persisted transition must appear here.
# Gate phases re-open in place (regeneration rounds are events, not
# transitions), and any non-terminal phase may fail.
PHASE_GRAPH: dict[Phase, set[Phase]] = {
    Phase.DISTILLING: {Phase.AWAITING_DESCRIPTION_FEEDBACK, Phase.PROMPTING},
    Phase.AWAITING_DESCRIPTION_FEEDBACK: {Phase.PROMPTING},
    Phase.PROMPTING: {Phase.REFLECTING},
    Phase.REFLECTING: {Phase.ELEMENT_GENERATION},
    Phase.ELEMENT_GENERATION: {Phase.AWAITING_ELEMENT_APPROVAL, Phase.LOCATING},
    Phase.AWAITING_ELEMENT_APPROVAL: {Phase.LOCATING},
    Phase.LOCATING: {Phase.STITCHING},
    Phase.STITCHING: {Phase.RENDERING},
    Phase.RENDERING: {Phase.ELEMENT_GENERATION, Phase.EVALUATING, Phase.DONE},
    Phase.EVALUATING: {Phase.DONE},
    Phase.DONE: set(),
    Phase.FAILED: set(),
}
for _phase in list(PHASE_GRAPH):
    if _phase not in TERMINAL_PHASES:
        PHASE_GRAPH[_phase].add(Phase.FAILED)


class GateName(str, Enum):
    DESCRIPTIONS = "descriptions"
    ELEMENT = "element"


@dataclass
class ApprovalEvent:
    run_id: str
    gate: GateName
    payload: list[dict[str, Any]]
    actor: str = "user"
    timestamp: float = field(default_factory=time.time)

    def feedback_edits(self) -> list[FeedbackEdit]:
        edits = []
        for doc in self.payload:
            target = EditTarget(doc["target"])
            target_id = doc["target_id"]
            if target == EditTarget.SCENE:
                target_id = int(target_id)
            edits.append(
                FeedbackEdit(
                    target=target,
                    target_id=target_id,
                    verdict=Verdict(doc["verdict"]),
                    patched_fields=doc.get("patched_fields", {}),
                )
            )
        return edits

    def element_verdicts(self) -> list[ElementVerdict]:
        return [
            ElementVerdict(element_key=doc["element_key"], verdict=Verdict(doc["verdict"]))
            for doc in self.payload
        ]


@dataclass
class PipelineRun:
    run_id: str
    story: Story
    config: RunConfig
    phase: Phase = Phase.DISTILLING
    scene_cursor: int = 0
    scenes: list[SceneDescription] = field(default_factory=list)
    characters: list[CharacterDescription] = field(default_factory=list)
    prompts: list[LayeredPrompts] = field(default_factory=list)
    report: ReflectionReport | None = None
    assemblies: list[SceneAssembly] = field(default_factory=list)
    storage: SubjectStorage = field(default_factory=SubjectStorage)
    events: EventLog = field(default_factory=EventLog)
    call_records: list[dict[str, Any]] = field(default_factory=list)
    element_attempts: dict[int, dict[str, int]] = field(default_factory=dict)
    feedback_attempts: dict[str, int] = field(default_factory=dict)
    metric_report: dict[str, Any] | None = None
    error: str | None = None
    created_at: float = field(default_factory=time.time)
    updated_at: float = field(default_factory=time.time)

    @classmethod
    def create(cls, story: Story, config: RunConfig) -> "PipelineRun":
        return cls(run_id=uuid.uuid4().hex[:12], story=story, config=config)

    def open_gates(self) -> list[str]:
        if self.phase == Phase.AWAITING_DESCRIPTION_FEEDBACK:
            return [GateName.DESCRIPTIONS.value]
        if self.phase == Phase.AWAITING_ELEMENT_APPROVAL:
            return [GateName.ELEMENT.value]
        return []

    def transition(self, new_phase: Phase) -> None:
        if new_phase not in PHASE_GRAPH[self.phase]:
            raise InvariantViolation(
                f"illegal transition {self.phase.value} -> {new_phase.value}"
            )
        self.events.append("phase_transition", before=self.phase.value, after=new_phase.value)
        self.phase = new_phase
        self.updated_at = time.time()

    def fail(self, error: str) -> None:
        self.error = error
        self.events.append("run_failed", error=error)
        self.transition(Phase.FAILED)

    def assembly_for(self, scene_index: int) -> SceneAssembly:
        for assembly in self.assemblies:
            if assembly.scene_index == scene_index:
                return assembly
        assembly = SceneAssembly(scene_index=scene_index)
        self.assemblies.append(assembly)
        return assembly

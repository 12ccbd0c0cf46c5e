"""One-shot image-module run: elements, approval gate, locate, stitch, render."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from ..backends import BackendSet
from ..errors import BackendError
from ..events import EventLog
from ..story.pipeline import AutoApproveChannel, FeedbackChannel
from ..story.types import InstructionSet, LayeredPrompts, Verdict
from .elements import ElementGenerationReport, element_key, generate_scene_elements
from .layout import locate_subjects
from .rendering import RendererConfig, SceneRenderer, render_scene
from .stitching import stitch
from .types import ElementKind, RenderedScene, SceneAssembly, SubjectStorage


@dataclass(frozen=True)
class ElementVerdict:
    element_key: str
    verdict: Verdict


def element_gate_payload(scene_index: int, report: ElementGenerationReport) -> dict:
    return {
        "gate": "element",
        "scene_index": scene_index,
        "elements": [element_key(e) for e in report.elements],
        "failures": list(report.failures),
    }


def run_image_module(
    prompts: Sequence[LayeredPrompts],
    instruction_set: InstructionSet,
    backends: BackendSet,
    approval_channel: FeedbackChannel | None = None,
    config: RendererConfig | None = None,
    storage: SubjectStorage | None = None,
    events: EventLog | None = None,
    feedback_timeout: float | None = None,
    min_area: float = 0.001,
    assemblies: list[SceneAssembly] | None = None,
) -> list[RenderedScene]:
    """Render every scene in prompt order, threading subject storage forward.

    The element gate re-opens after each regeneration round until the
    channel approves (or immediately under auto-approve).
    """
    channel = approval_channel or AutoApproveChannel()
    config = config or RendererConfig()
    storage = storage if storage is not None else SubjectStorage()
    events = events if events is not None else EventLog()
    renderer = SceneRenderer(backends.encoder)
    rendered: list[RenderedScene] = []

    for layered in prompts:
        scene = layered.scene_index
        attempts: dict[str, int] = {}
        report = generate_scene_elements(
            layered,
            storage,
            backends.image,
            backends.encoder,
            canvas=config.canvas,
            seed=config.seed,
            attempts=attempts,
            d_model=config.d_model,
        )
        events.append("elements_generated", scene_index=scene, count=len(report.elements))
        if report.failures:
            raise BackendError(f"element generation failed: {report.failures}")

        while True:
            events.append("element_gate_opened", scene_index=scene)
            verdicts = channel.wait_for_feedback(
                "element", element_gate_payload(scene, report), feedback_timeout
            )
            rejected = [v.element_key for v in verdicts if v.verdict == Verdict.REGENERATE]
            events.append(
                "element_feedback", scene_index=scene, rejected=len(rejected)
            )
            if not rejected:
                break
            for key in rejected:
                attempts[key] = attempts.get(key, 0) + 1
            # Regeneration reuses the same prompt with a fresh derived seed.
            retry = generate_scene_elements(
                layered,
                storage,
                backends.image,
                backends.encoder,
                canvas=config.canvas,
                seed=config.seed,
                attempts=attempts,
                d_model=config.d_model,
                only=set(rejected),
            )
            if retry.failures:
                raise BackendError(f"element regeneration failed: {retry.failures}")
            fresh = {element_key(e): e for e in retry.elements}
            report.elements = [
                fresh[element_key(e)] if element_key(e) in rejected else e
                for e in report.elements
            ]
            events.append("elements_regenerated", scene_index=scene, keys=rejected)

        bg = next(e for e in report.elements if e.kind == ElementKind.BACKGROUND)
        fg_elements = [e for e in report.elements if e.kind == ElementKind.FOREGROUND]
        layouts = locate_subjects(
            layered,
            bg,
            fg_elements,
            backends.layout,
            min_area=min_area,
            instruction=instruction_set.entries.get("scene_location", ""),
        )
        events.append("subjects_located", scene_index=scene, count=len(layouts))

        stitched = stitch(bg, fg_elements, layouts, backends.segmentation)
        events.append("scene_stitched", scene_index=scene, notes=list(stitched.notes))

        scene_render = render_scene(stitched, layered, report.elements, layouts, renderer, config)
        events.append("scene_rendered", scene_index=scene)
        rendered.append(scene_render)
        if assemblies is not None:
            assemblies.append(
                SceneAssembly(
                    scene_index=scene,
                    elements=list(report.elements),
                    layouts=list(layouts),
                    stitched=stitched,
                    rendered=scene_render,
                )
            )
    return rendered

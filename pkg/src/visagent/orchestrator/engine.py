"""The run engine: phase execution, approval handling, persistence."""

from __future__ import annotations

import threading
from collections import defaultdict
from pathlib import Path
from typing import Any

from ..backends import BackendSet
from ..config import RunConfig
from ..errors import BackendError, ConfigError, GateClosed, VisAgentError
from ..image.elements import element_key, generate_scene_elements
from ..image.layout import locate_subjects
from ..image.pipeline import element_gate_payload
from ..image.rendering import SceneRenderer, render_scene
from ..image.stitching import stitch
from ..image.types import ElementKind
from ..story.agents import generate_layered_prompts, link_character_refs, reflect
from ..story.pipeline import _extract_both, descriptions_gate_payload, run_feedback_round
from ..story.types import Story, Verdict
from .state import (
    GATE_PHASES,
    TERMINAL_PHASES,
    ApprovalEvent,
    GateName,
    Phase,
    PipelineRun,
)
from .store import RunStore, run_document


class Engine:
    """Drives runs through the state machine, one phase per advance.

    Module execution for a run is single-threaded (a per-run lock); reads
    may happen concurrently against persisted snapshots.
    """

    def __init__(self, store: RunStore | str | Path) -> None:
        self.store = store if isinstance(store, RunStore) else RunStore(store)
        self._runs: dict[str, PipelineRun] = {}
        self._backends: dict[str, BackendSet] = {}
        self._drained: dict[str, dict[str, int]] = defaultdict(dict)
        self._locks: dict[str, threading.RLock] = defaultdict(threading.RLock)

    # -- lifecycle ---------------------------------------------------------

    def create_run(self, story: Story, config: RunConfig) -> PipelineRun:
        self._backends_for_config(config)  # fail fast on unknown backend names
        run = PipelineRun.create(story, config)
        run.events.append("run_created", num_scenes=config.num_scenes)
        self._runs[run.run_id] = run
        self.store.save(run)
        return run

    def get_run(self, run_id: str) -> PipelineRun:
        run = self._runs.get(run_id)
        if run is None:
            run = self.store.load(run_id)
            self._runs[run_id] = run
        return run

    def list_runs(self) -> list[str]:
        known = set(self._runs) | set(self.store.list_runs())
        return sorted(known)

    def backends_for(self, run: PipelineRun) -> BackendSet:
        backends = self._backends.get(run.run_id)
        if backends is None:
            backends = self._backends_for_config(run.config)
            self._backends[run.run_id] = backends
        return backends

    def _backends_for_config(self, config: RunConfig) -> BackendSet:
        names = dict(config.backend_names)
        options = {k: dict(v) for k, v in config.backend_options.items()}
        options.setdefault("image", {}).setdefault("canvas", list(config.canvas))
        options.setdefault("embedding", {}).setdefault("dim", config.embedding_dim)
        try:
            return BackendSet.from_names(names, options)
        except ConfigError:
            raise
        except Exception as exc:
            raise ConfigError(str(exc)) from exc

    # -- phase execution ---------------------------------------------------

    def advance(self, run_id: str) -> PipelineRun:
        """Execute the next phase and persist atomically.

        A no-op on terminal runs and on runs waiting at a gate (those exit
        only via submit_approval).
        """
        with self._locks[run_id]:
            run = self.get_run(run_id)
            if run.phase in TERMINAL_PHASES or run.phase in GATE_PHASES:
                return run
            try:
                self._execute_phase(run)
            except VisAgentError as exc:
                run.fail(f"{type(exc).__name__}: {exc}")
            self._drain_calls(run)
            self.store.save(run)
            return run

    def run_until_blocked(self, run_id: str) -> PipelineRun:
        while True:
            run = self.advance(run_id)
            if run.phase in TERMINAL_PHASES or run.phase in GATE_PHASES:
                return run

    def _execute_phase(self, run: PipelineRun) -> None:
        handlers = {
            Phase.DISTILLING: self._phase_distilling,
            Phase.PROMPTING: self._phase_prompting,
            Phase.REFLECTING: self._phase_reflecting,
            Phase.ELEMENT_GENERATION: self._phase_element_generation,
            Phase.LOCATING: self._phase_locating,
            Phase.STITCHING: self._phase_stitching,
            Phase.RENDERING: self._phase_rendering,
            Phase.EVALUATING: self._phase_evaluating,
        }
        handlers[run.phase](run)

    def _phase_distilling(self, run: PipelineRun) -> None:
        backends = self.backends_for(run)
        config = run.config.distillation_config()
        scenes, characters = _extract_both(run.story, config, backends)
        run.scenes = link_character_refs(scenes, characters, run.story)
        run.characters = characters
        run.events.append("scenes_extracted", count=len(run.scenes))
        run.events.append("characters_extracted", count=len(run.characters))
        if run.config.auto_approve:
            run.events.append("gate_auto_approved", gate=GateName.DESCRIPTIONS.value)
            run.transition(Phase.PROMPTING)
        else:
            run.transition(Phase.AWAITING_DESCRIPTION_FEEDBACK)
            run.events.append(
                "gate_opened",
                gate=GateName.DESCRIPTIONS.value,
                payload=descriptions_gate_payload(run.scenes, run.characters),
            )

    def _phase_prompting(self, run: PipelineRun) -> None:
        backends = self.backends_for(run)
        config = run.config.distillation_config()
        run.prompts = list(
            generate_layered_prompts(
                run.scenes,
                run.characters,
                config.instructions(),
                backends.text,
                separator=config.separator,
                bg_style_suffix=config.bg_style_suffix,
                retries=config.schema_retries,
            )
        )
        run.events.append("prompts_generated", count=len(run.prompts))
        run.transition(Phase.REFLECTING)

    def _phase_reflecting(self, run: PipelineRun) -> None:
        backends = self.backends_for(run)
        config = run.config.distillation_config()
        run.report = reflect(
            run.prompts,
            run.scenes,
            run.story,
            backends.text,
            backends.embedding,
            threshold=config.reflection_threshold,
            instruction_set=config.instructions(),
            retries=config.schema_retries,
        )
        run.events.append("reflection_completed", passed=run.report.all_passed())
        if run.config.block_on_reflection and not run.report.all_passed():
            run.fail("reflection flagged blocking deviations")
            return
        run.transition(Phase.ELEMENT_GENERATION)

    def _phase_element_generation(self, run: PipelineRun) -> None:
        backends = self.backends_for(run)
        layered = run.prompts[run.scene_cursor]
        attempts = run.element_attempts.setdefault(layered.scene_index, {})
        report = generate_scene_elements(
            layered,
            run.storage,
            backends.image,
            backends.encoder,
            canvas=tuple(run.config.canvas),
            seed=run.config.seed,
            attempts=attempts,
            d_model=run.config.d_model,
        )
        if report.failures:
            raise BackendError(f"element generation failed: {report.failures}")
        assembly = run.assembly_for(layered.scene_index)
        assembly.elements = list(report.elements)
        run.events.append(
            "elements_generated", scene_index=layered.scene_index, count=len(report.elements)
        )
        if run.config.auto_approve:
            run.events.append("gate_auto_approved", gate=GateName.ELEMENT.value)
            run.transition(Phase.LOCATING)
        else:
            run.transition(Phase.AWAITING_ELEMENT_APPROVAL)
            run.events.append(
                "gate_opened",
                gate=GateName.ELEMENT.value,
                payload=element_gate_payload(layered.scene_index, report),
            )

    def _phase_locating(self, run: PipelineRun) -> None:
        backends = self.backends_for(run)
        layered = run.prompts[run.scene_cursor]
        assembly = run.assembly_for(layered.scene_index)
        bg = next(e for e in assembly.elements if e.kind == ElementKind.BACKGROUND)
        fg_elements = [e for e in assembly.elements if e.kind == ElementKind.FOREGROUND]
        assembly.layouts = locate_subjects(
            layered,
            bg,
            fg_elements,
            backends.layout,
            min_area=run.config.min_area,
        )
        run.events.append(
            "subjects_located", scene_index=layered.scene_index, count=len(assembly.layouts)
        )
        run.transition(Phase.STITCHING)

    def _phase_stitching(self, run: PipelineRun) -> None:
        backends = self.backends_for(run)
        layered = run.prompts[run.scene_cursor]
        assembly = run.assembly_for(layered.scene_index)
        bg = next(e for e in assembly.elements if e.kind == ElementKind.BACKGROUND)
        fg_elements = [e for e in assembly.elements if e.kind == ElementKind.FOREGROUND]
        assembly.stitched = stitch(bg, fg_elements, assembly.layouts, backends.segmentation)
        run.events.append(
            "scene_stitched",
            scene_index=layered.scene_index,
            notes=list(assembly.stitched.notes),
        )
        run.transition(Phase.RENDERING)

    def _phase_rendering(self, run: PipelineRun) -> None:
        backends = self.backends_for(run)
        layered = run.prompts[run.scene_cursor]
        assembly = run.assembly_for(layered.scene_index)
        renderer = SceneRenderer(backends.encoder)
        assembly.rendered = render_scene(
            assembly.stitched,
            layered,
            assembly.elements,
            assembly.layouts,
            renderer,
            run.config.renderer_config(),
        )
        run.events.append("scene_rendered", scene_index=layered.scene_index)
        if run.scene_cursor + 1 < len(run.prompts):
            run.scene_cursor += 1
            run.transition(Phase.ELEMENT_GENERATION)
        elif run.config.evaluate:
            run.transition(Phase.EVALUATING)
        else:
            run.transition(Phase.DONE)

    def _phase_evaluating(self, run: PipelineRun) -> None:
        from ..evaluation.runs import evaluate_run

        backends = self.backends_for(run)
        # The evaluator reads artifacts from disk; everything it needs was
        # persisted when the rendering phases completed.
        self.store.save(run)
        report = evaluate_run(self.store.run_dir(run.run_id), backends.embedding)
        run.metric_report = report.to_dict()
        run.events.append("run_evaluated")
        run.transition(Phase.DONE)

    # -- approvals ---------------------------------------------------------

    def submit_approval(self, event: ApprovalEvent) -> PipelineRun:
        with self._locks[event.run_id]:
            run = self.get_run(event.run_id)
            if event.gate.value not in run.open_gates():
                raise GateClosed(
                    f"gate {event.gate.value!r} is not open (phase {run.phase.value})"
                )
            run.events.append(
                "approval_submitted",
                gate=event.gate.value,
                actor=event.actor,
                decisions=len(event.payload),
            )
            try:
                if event.gate == GateName.DESCRIPTIONS:
                    self._approve_descriptions(run, event)
                else:
                    self._approve_element(run, event)
            except VisAgentError as exc:
                run.fail(f"{type(exc).__name__}: {exc}")
            self._drain_calls(run)
            self.store.save(run)
            return run

    def _approve_descriptions(self, run: PipelineRun, event: ApprovalEvent) -> None:
        backends = self.backends_for(run)
        config = run.config.distillation_config()
        scenes, characters, approved = run_feedback_round(
            run.story,
            config,
            backends,
            run.scenes,
            run.characters,
            event.feedback_edits(),
            run.feedback_attempts,
            run.events,
        )
        run.scenes, run.characters = scenes, characters
        if approved:
            run.transition(Phase.PROMPTING)
        else:
            run.events.append(
                "gate_opened",
                gate=GateName.DESCRIPTIONS.value,
                payload=descriptions_gate_payload(run.scenes, run.characters),
            )

    def _approve_element(self, run: PipelineRun, event: ApprovalEvent) -> None:
        backends = self.backends_for(run)
        layered = run.prompts[run.scene_cursor]
        assembly = run.assembly_for(layered.scene_index)
        rejected = [
            v.element_key for v in event.element_verdicts() if v.verdict == Verdict.REGENERATE
        ]
        if not rejected:
            run.transition(Phase.LOCATING)
            return
        attempts = run.element_attempts.setdefault(layered.scene_index, {})
        for key in rejected:
            attempts[key] = attempts.get(key, 0) + 1
        retry = generate_scene_elements(
            layered,
            run.storage,
            backends.image,
            backends.encoder,
            canvas=tuple(run.config.canvas),
            seed=run.config.seed,
            attempts=attempts,
            d_model=run.config.d_model,
            only=set(rejected),
        )
        if retry.failures:
            raise BackendError(f"element regeneration failed: {retry.failures}")
        fresh = {element_key(e): e for e in retry.elements}
        assembly.elements = [
            fresh.get(element_key(e), e) for e in assembly.elements
        ]
        run.events.append(
            "elements_regenerated", scene_index=layered.scene_index, keys=rejected
        )
        run.events.append(
            "gate_opened",
            gate=GateName.ELEMENT.value,
            payload={"scene_index": layered.scene_index, "reopened_after": rejected},
        )

    def evaluate(self, run_id: str):
        """Metrics over a finished run; serialized against concurrent saves."""
        from ..evaluation.runs import evaluate_run

        with self._locks[run_id]:
            run = self.get_run(run_id)
            backends = self.backends_for(run)
            report = evaluate_run(self.store.run_dir(run_id), backends.embedding)
            run.metric_report = report.to_dict()
            self.store.save(run)
            return report

    # -- views and bookkeeping ----------------------------------------------

    def get_state(self, run_id: str) -> dict[str, Any]:
        """Serializable run view with artifact references and open gates."""
        run = self.get_run(run_id)
        doc = run_document(run)
        doc.pop("events")
        doc.pop("call_records")
        doc["open_gates"] = run.open_gates()
        doc["event_count"] = len(run.events)
        doc["num_scenes"] = run.config.num_scenes
        return doc

    def get_events(self, run_id: str, after: int = -1) -> list[dict[str, Any]]:
        run = self.get_run(run_id)
        return [e.to_dict() for e in run.events.events(after)]

    def _drain_calls(self, run: PipelineRun) -> None:
        """Copy fresh backend call records into the run, one event each."""
        backends = self.backends_for(run)
        drained = self._drained[run.run_id]
        for name, backend in backends.named().items():
            records = backend.calls.records()
            start = drained.get(name, 0)
            for record in records[start:]:
                run.call_records.append(record.to_dict())
                run.events.append(
                    "backend_call",
                    backend=record.backend_name,
                    role=record.role,
                    retry_index=record.retry_index,
                )
            drained[name] = len(records)

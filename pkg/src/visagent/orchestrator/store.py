"""Durable run state: one directory per run, atomic JSON document + PNGs.

Images land under ``scene_<i>/`` with deterministic names (bg.png,
fg_<character_id>.png, stitched.png, final.png); masks, provenance and
reference tokens as npz/npy beside them. The state document carries a
digest over its canonical form, verified on load.
"""

from __future__ import annotations

import copy
import json
import os
import tempfile
from pathlib import Path
from typing import Any

import numpy as np
from PIL import Image

from ..config import RunConfig
from ..errors import StoreCorrupt, UnknownRun
from ..events import EventLog
from ..hashing import digest_obj
from ..image.types import (
    ElementImage,
    ElementKind,
    Layout,
    ReferenceRecord,
    RenderedScene,
    SceneAssembly,
    StitchedImage,
)
from ..story.types import (
    Act,
    CharacterDescription,
    LayeredPrompts,
    ReflectionEntry,
    ReflectionReport,
    SceneDescription,
    Story,
)
from .state import Phase, PipelineRun


def _save_png(path: Path, pixels: np.ndarray) -> None:
    # atomic replacement: concurrent readers never see a partial file
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=".img-", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as handle:
            Image.fromarray(pixels).save(handle, format="PNG")
        os.replace(tmp_name, path)
    finally:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)


def _load_png(path: Path) -> np.ndarray:
    return np.asarray(Image.open(path).convert("RGB"))


def _element_path(scene_index: int, element: ElementImage) -> str:
    if element.kind == ElementKind.BACKGROUND:
        return f"scene_{scene_index}/bg.png"
    return f"scene_{scene_index}/fg_{element.character_id}.png"


def run_document(run: PipelineRun) -> dict[str, Any]:
    """JSON-serializable projection of the run; images referenced by path."""
    assemblies = []
    for assembly in run.assemblies:
        scene = assembly.scene_index
        doc: dict[str, Any] = {
            "scene_index": scene,
            "elements": [
                {
                    "kind": e.kind.value,
                    "character_id": e.character_id,
                    "generation_seed": e.generation_seed,
                    "path": _element_path(scene, e),
                }
                for e in assembly.elements
            ],
            "layouts": [
                {
                    "scene_index": l.scene_index,
                    "character_id": l.character_id,
                    "bbox": list(l.bbox),
                    "z_order": l.z_order,
                }
                for l in assembly.layouts
            ],
            "stitched": None,
            "rendered": None,
        }
        if assembly.stitched is not None:
            doc["stitched"] = {
                "path": f"scene_{scene}/stitched.png",
                "masks_path": f"scene_{scene}/masks.npz",
                "provenance_path": f"scene_{scene}/provenance.npy",
                "provenance_labels": list(assembly.stitched.provenance_labels),
                "notes": list(assembly.stitched.notes),
            }
        if assembly.rendered is not None:
            doc["rendered"] = {
                "path": f"scene_{scene}/final.png",
                "renderer_config_digest": assembly.rendered.renderer_config_digest,
                "lambda_trace": list(assembly.rendered.lambda_trace),
            }
        assemblies.append(doc)

    storage_doc: dict[str, list[dict[str, Any]]] = {}
    for cid in run.storage.character_ids():
        storage_doc[cid] = [
            {
                "scene_index": record.scene_index,
                "image_path": f"storage/{cid}/{k}_image.png",
                "tokens_path": f"storage/{cid}/{k}_tokens.npy",
            }
            for k, record in enumerate(run.storage.records(cid))
        ]

    return {
        "run_id": run.run_id,
        "phase": run.phase.value,
        "scene_cursor": run.scene_cursor,
        "created_at": run.created_at,
        "updated_at": run.updated_at,
        "error": run.error,
        "story": {"text": run.story.text, "title": run.story.title},
        "config": run.config.to_dict(),
        "scenes": [
            {
                "scene_index": s.scene_index,
                "act": s.act.value,
                "summary": s.summary,
                "source_span": list(s.source_span),
                "character_refs": list(s.character_refs),
            }
            for s in run.scenes
        ],
        "characters": [
            {
                "character_id": c.character_id,
                "name": c.name,
                "attributes": dict(c.attributes),
                "attire_inferred": c.attire_inferred,
            }
            for c in run.characters
        ],
        "prompts": [
            {
                "scene_index": p.scene_index,
                "bg_prompt": p.bg_prompt,
                "fg_prompts": dict(p.fg_prompts),
                "global_prompt": p.global_prompt,
            }
            for p in run.prompts
        ],
        "reflection": None
        if run.report is None
        else {
            "threshold": run.report.threshold,
            "entries": [
                {
                    "scene_index": e.scene_index,
                    "similarity_score": e.similarity_score,
                    "deviation_notes": list(e.deviation_notes),
                    "passed": e.passed,
                }
                for e in run.report.entries
            ],
        },
        "assemblies": assemblies,
        "storage": storage_doc,
        "element_attempts": {str(k): dict(v) for k, v in run.element_attempts.items()},
        "feedback_attempts": dict(run.feedback_attempts),
        "events": run.events.to_dicts(),
        "call_records": list(run.call_records),
        "metric_report": run.metric_report,
    }


def state_digest(run_doc: dict[str, Any]) -> str:
    return digest_obj(run_doc)


def content_digest(run_doc: dict[str, Any]) -> str:
    """Digest over run content, excluding identity and wall-clock fields.

    Two executions of the same inputs with deterministic backends must
    agree on this digest even though timestamps differ.
    """
    doc = copy.deepcopy(run_doc)
    for key in ("run_id", "created_at", "updated_at"):
        doc.pop(key, None)
    for event in doc.get("events", []):
        event.pop("timestamp", None)
    for record in doc.get("call_records", []):
        record.pop("wall_time", None)
    return digest_obj(doc)


class RunStore:
    """One directory per run; concurrent readers, single writer per run."""

    def __init__(self, root: str | Path) -> None:
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def run_dir(self, run_id: str) -> Path:
        return self.root / run_id

    def list_runs(self) -> list[str]:
        return sorted(
            p.name for p in self.root.iterdir() if (p / "state.json").exists()
        )

    def save(self, run: PipelineRun) -> str:
        """Persist artifacts then atomically replace state.json; returns digest."""
        run_dir = self.run_dir(run.run_id)
        run_dir.mkdir(parents=True, exist_ok=True)

        for assembly in run.assemblies:
            scene = assembly.scene_index
            for element in assembly.elements:
                _save_png(run_dir / _element_path(scene, element), element.pixels)
            if assembly.stitched is not None:
                _save_png(run_dir / f"scene_{scene}/stitched.png", assembly.stitched.pixels)
                np.save(
                    run_dir / f"scene_{scene}/provenance.npy",
                    assembly.stitched.provenance,
                )
                np.savez(
                    run_dir / f"scene_{scene}/masks.npz",
                    **{cid: mask for cid, mask in assembly.stitched.masks.items()},
                )
            if assembly.rendered is not None:
                _save_png(run_dir / f"scene_{scene}/final.png", assembly.rendered.pixels)

        for cid in run.storage.character_ids():
            for k, record in enumerate(run.storage.records(cid)):
                image_path = run_dir / f"storage/{cid}/{k}_image.png"
                if not image_path.exists():
                    _save_png(image_path, record.image)
                    np.save(run_dir / f"storage/{cid}/{k}_tokens.npy", record.tokens)

        doc = run_document(run)
        payload = {"digest": state_digest(doc), "run": doc}
        text = json.dumps(payload, indent=2, ensure_ascii=False)
        fd, tmp_name = tempfile.mkstemp(dir=run_dir, prefix=".state-", suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as handle:
                handle.write(text)
                handle.flush()
                os.fsync(handle.fileno())
            os.replace(tmp_name, run_dir / "state.json")
        finally:
            if os.path.exists(tmp_name):
                os.unlink(tmp_name)
        return payload["digest"]

    def load(self, run_id: str) -> PipelineRun:
        run_dir = self.run_dir(run_id)
        state_path = run_dir / "state.json"
        if not state_path.exists():
            raise UnknownRun(f"no run {run_id!r} under {self.root}")
        payload = json.loads(state_path.read_text(encoding="utf-8"))
        doc = payload.get("run")
        if doc is None or state_digest(doc) != payload.get("digest"):
            raise StoreCorrupt(f"state digest mismatch for run {run_id!r}")

        run = PipelineRun(
            run_id=doc["run_id"],
            story=Story(text=doc["story"]["text"], title=doc["story"].get("title")),
            config=RunConfig.from_dict(doc["config"]),
            phase=Phase(doc["phase"]),
            scene_cursor=doc["scene_cursor"],
            created_at=doc["created_at"],
            updated_at=doc["updated_at"],
            error=doc.get("error"),
            metric_report=doc.get("metric_report"),
        )
        run.scenes = [
            SceneDescription(
                scene_index=s["scene_index"],
                act=Act(s["act"]),
                summary=s["summary"],
                source_span=tuple(s["source_span"]),
                character_refs=tuple(s["character_refs"]),
            )
            for s in doc["scenes"]
        ]
        run.characters = [
            CharacterDescription(
                character_id=c["character_id"],
                name=c["name"],
                attributes=c["attributes"],
                attire_inferred=c["attire_inferred"],
            )
            for c in doc["characters"]
        ]
        run.prompts = [
            LayeredPrompts(
                scene_index=p["scene_index"],
                bg_prompt=p["bg_prompt"],
                fg_prompts=p["fg_prompts"],
                global_prompt=p["global_prompt"],
            )
            for p in doc["prompts"]
        ]
        if doc.get("reflection"):
            reflection = doc["reflection"]
            run.report = ReflectionReport(
                entries=tuple(
                    ReflectionEntry(
                        scene_index=e["scene_index"],
                        similarity_score=e["similarity_score"],
                        deviation_notes=tuple(e["deviation_notes"]),
                        passed=e["passed"],
                    )
                    for e in reflection["entries"]
                ),
                threshold=reflection["threshold"],
            )

        for adoc in doc["assemblies"]:
            scene = adoc["scene_index"]
            assembly = SceneAssembly(scene_index=scene)
            for edoc in adoc["elements"]:
                assembly.elements.append(
                    ElementImage(
                        kind=ElementKind(edoc["kind"]),
                        scene_index=scene,
                        pixels=_load_png(run_dir / edoc["path"]),
                        generation_seed=edoc["generation_seed"],
                        character_id=edoc.get("character_id"),
                    )
                )
            assembly.layouts = [
                Layout(
                    scene_index=l["scene_index"],
                    character_id=l["character_id"],
                    bbox=tuple(l["bbox"]),
                    z_order=l["z_order"],
                )
                for l in adoc["layouts"]
            ]
            if adoc.get("stitched"):
                sdoc = adoc["stitched"]
                with np.load(run_dir / sdoc["masks_path"]) as masks_file:
                    masks = {cid: masks_file[cid] for cid in masks_file.files}
                assembly.stitched = StitchedImage(
                    scene_index=scene,
                    pixels=_load_png(run_dir / sdoc["path"]),
                    masks=masks,
                    provenance=np.load(run_dir / sdoc["provenance_path"]),
                    provenance_labels=tuple(sdoc["provenance_labels"]),
                    notes=tuple(sdoc["notes"]),
                )
            if adoc.get("rendered"):
                rdoc = adoc["rendered"]
                assembly.rendered = RenderedScene(
                    scene_index=scene,
                    pixels=_load_png(run_dir / rdoc["path"]),
                    renderer_config_digest=rdoc["renderer_config_digest"],
                    lambda_trace=tuple(rdoc["lambda_trace"]),
                )
            run.assemblies.append(assembly)

        for cid, records in doc["storage"].items():
            for record in records:
                run.storage.add(
                    ReferenceRecord(
                        character_id=cid,
                        image=_load_png(run_dir / record["image_path"]),
                        tokens=np.load(run_dir / record["tokens_path"]),
                        scene_index=record["scene_index"],
                    )
                )

        run.element_attempts = {
            int(k): dict(v) for k, v in doc.get("element_attempts", {}).items()
        }
        run.feedback_attempts = dict(doc.get("feedback_attempts", {}))
        run.events = EventLog.from_dicts(doc.get("events", []))
        run.call_records = list(doc.get("call_records", []))
        return run

"""Run-directory evaluation: compute all metrics over a finished run."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np
from PIL import Image

from ..backends.base import EmbeddingBackend
from ..errors import EmptyInput, InvariantViolation, ParseError
from ..saca.masks import grid_rect
from .metrics import FeatureExtractor, ccs, extract_features, fid, tis


@dataclass(frozen=True)
class MetricReport:
    """tis/ccs in percent, fid unbounded below at zero; absent metrics are None."""

    tis: float | None
    fid: float | None
    ccs: float | None
    sample_counts: dict[str, int]
    backends: dict[str, str]

    def __post_init__(self) -> None:
        for name, value in (("tis", self.tis), ("ccs", self.ccs)):
            if value is not None and not 0.0 <= value <= 100.0:
                raise InvariantViolation(f"{name} {value} outside [0, 100]")
        if self.fid is not None and self.fid < 0.0:
            raise InvariantViolation(f"fid {self.fid} negative")

    def to_dict(self) -> dict[str, Any]:
        return {
            "tis": self.tis,
            "fid": self.fid,
            "ccs": self.ccs,
            "sample_counts": self.sample_counts,
            "backends": self.backends,
        }


def _load_image(path: Path) -> np.ndarray:
    return np.asarray(Image.open(path).convert("RGB"))


def evaluate_run(
    run_dir: str | Path,
    embedder: EmbeddingBackend,
    feature_extractor: FeatureExtractor | None = None,
    write_report: bool = True,
) -> MetricReport:
    """All three metrics over a run's rendered scenes.

    TIS pairs each final image with its global prompt; CCS crops
    characters out of the final images using the persisted layouts
    (characters seen fewer than twice are skipped, and the metric is
    absent when nobody qualifies); FID compares final-image features with
    stitched-guidance features and is absent below two scenes per set.
    """
    run_dir = Path(run_dir)
    state_path = run_dir / "state.json"
    if not state_path.exists():
        raise ParseError(f"no state.json under {run_dir}")
    state = json.loads(state_path.read_text(encoding="utf-8"))
    run = state["run"]
    extractor = feature_extractor or embedder.embed

    prompts_by_scene = {p["scene_index"]: p for p in run.get("prompts", [])}
    finals: list[np.ndarray] = []
    stitches: list[np.ndarray] = []
    prompt_texts: list[str] = []
    crops: dict[str, list[np.ndarray]] = {}

    for assembly in run.get("assemblies", []):
        scene_index = assembly["scene_index"]
        rendered = assembly.get("rendered")
        stitched = assembly.get("stitched")
        if not rendered or not stitched:
            continue
        final = _load_image(run_dir / rendered["path"])
        finals.append(final)
        stitches.append(_load_image(run_dir / stitched["path"]))
        prompt_texts.append(prompts_by_scene[scene_index]["global_prompt"])
        height, width = final.shape[:2]
        for layout in assembly.get("layouts", []):
            y0, y1, x0, x1 = grid_rect(tuple(layout["bbox"]), height, width)
            crops.setdefault(layout["character_id"], []).append(final[y0:y1, x0:x1])

    if not finals:
        raise EmptyInput(f"run {run_dir} holds no rendered scenes")

    tis_value = tis(finals, prompt_texts, embedder)

    eligible = {cid: c for cid, c in crops.items() if len(c) >= 2}
    ccs_value = ccs(eligible, embedder) if eligible else None

    fid_value = None
    if len(finals) >= 2 and len(stitches) >= 2:
        fid_value = fid(
            extract_features(finals, extractor), extract_features(stitches, extractor)
        )

    report = MetricReport(
        tis=tis_value,
        fid=fid_value,
        ccs=ccs_value,
        sample_counts={
            "scenes": len(finals),
            "tis_pairs": len(finals),
            "ccs_characters": len(eligible),
        },
        backends={"embedding": embedder.descriptor.name},
    )
    if write_report:
        (run_dir / "metric_report.json").write_text(
            json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8"
        )
    return report

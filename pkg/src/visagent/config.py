"""Run configuration: backends, distillation, renderer, gates, seeds."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any

from .errors import ConfigError
from .image.rendering import RendererConfig
from .saca.schedule import GlobalBlendSchedule, default_schedule
from .story.types import CharacterCategorySchema, DistillationConfig


def _default_schedule_entries() -> list[dict[str, Any]]:
    return default_schedule().to_entries()


@dataclass
class RunConfig:
    num_scenes: int = 5
    seed: int = 0
    canvas: tuple[int, int] = (64, 64)
    latent_size: tuple[int, int] = (8, 8)
    d_model: int = 32
    num_heads: int = 4
    w_img: float = 1.0
    steps: int = 30
    schedule_entries: list[dict[str, Any]] = field(default_factory=_default_schedule_entries)
    guidance_start_step: int = 15
    num_tokens: int = 8
    separator: str = ", "
    bg_style_suffix: str = "highres, detailed, soft lighting, daytime"
    reflection_threshold: float = 0.6
    block_on_reflection: bool = False
    auto_approve: bool = False
    evaluate: bool = True
    min_area: float = 0.001
    schema_retries: int = 2
    embedding_dim: int = 32
    feedback_timeout: float | None = None
    schema_keys: tuple[str, ...] = ("appearance", "attire", "gender")
    backend_names: dict[str, str] = field(default_factory=dict)
    backend_options: dict[str, dict[str, Any]] = field(default_factory=dict)

    def schedule(self) -> GlobalBlendSchedule:
        return GlobalBlendSchedule.from_entries(self.schedule_entries, self.steps)

    def renderer_config(self) -> RendererConfig:
        return RendererConfig(
            canvas=tuple(self.canvas),
            latent_size=tuple(self.latent_size),
            d_model=self.d_model,
            num_heads=self.num_heads,
            w_img=self.w_img,
            steps=self.steps,
            schedule=self.schedule(),
            guidance_start_step=self.guidance_start_step,
            num_tokens=self.num_tokens,
            seed=self.seed,
        )

    def distillation_config(self) -> DistillationConfig:
        return DistillationConfig(
            num_scenes=self.num_scenes,
            category_schema=CharacterCategorySchema(keys=tuple(self.schema_keys)),
            separator=self.separator,
            bg_style_suffix=self.bg_style_suffix,
            reflection_threshold=self.reflection_threshold,
            schema_retries=self.schema_retries,
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "num_scenes": self.num_scenes,
            "seed": self.seed,
            "canvas": list(self.canvas),
            "latent_size": list(self.latent_size),
            "d_model": self.d_model,
            "num_heads": self.num_heads,
            "w_img": self.w_img,
            "steps": self.steps,
            "schedule_entries": self.schedule_entries,
            "guidance_start_step": self.guidance_start_step,
            "num_tokens": self.num_tokens,
            "separator": self.separator,
            "bg_style_suffix": self.bg_style_suffix,
            "reflection_threshold": self.reflection_threshold,
            "block_on_reflection": self.block_on_reflection,
            "auto_approve": self.auto_approve,
            "evaluate": self.evaluate,
            "min_area": self.min_area,
            "schema_retries": self.schema_retries,
            "embedding_dim": self.embedding_dim,
            "feedback_timeout": self.feedback_timeout,
            "schema_keys": list(self.schema_keys),
            "backend_names": self.backend_names,
            "backend_options": self.backend_options,
        }

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kwargs = dict(doc)
        for key in ("canvas", "latent_size", "schema_keys"):
            if key in kwargs and kwargs[key] is not None:
                kwargs[key] = tuple(kwargs[key])
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path: str | Path) -> "RunConfig":
        path = Path(path)
        text = path.read_text(encoding="utf-8")
        if path.suffix in (".yaml", ".yml"):
            import yaml

            doc = yaml.safe_load(text)
        else:
            doc = json.loads(text)
        if not isinstance(doc, dict):
            raise ConfigError(f"config file {path} must hold an object")
        return cls.from_dict(doc)

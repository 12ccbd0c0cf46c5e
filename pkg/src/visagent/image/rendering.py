"""Scene rendering: latent guidance from the stitched image through the
SA-CA denoiser host."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np
import torch
from PIL import Image

from ..backends.base import TokenEncoder
from ..errors import ConfigError
from ..hashing import derive_seed, digest_obj, rng_for
from ..saca import (
    AttentionConfig,
    GlobalBlendSchedule,
    RegionTokenBundle,
    ToyDenoiser,
    default_schedule,
    forward_diffuse,
    rasterize_masks,
    toy_denoise,
)
from ..saca.masks import BACKGROUND_REGION, GLOBAL_REGION
from ..story.types import LayeredPrompts
from .types import ElementImage, ElementKind, Layout, RenderedScene, StitchedImage


@dataclass(frozen=True)
class RendererConfig:
    canvas: tuple[int, int] = (64, 64)
    latent_size: tuple[int, int] = (8, 8)
    d_model: int = 32
    num_heads: int = 4
    w_img: float = 1.0
    steps: int = 30
    schedule: GlobalBlendSchedule = field(default_factory=default_schedule)
    guidance_start_step: int = 15
    num_tokens: int = 8
    seed: int = 0

    def __post_init__(self) -> None:
        if self.schedule.total_steps != self.steps:
            raise ConfigError(
                f"schedule covers {self.schedule.total_steps} steps, config wants {self.steps}"
            )
        if not 0 <= self.guidance_start_step <= self.steps:
            raise ConfigError(
                f"guidance_start_step {self.guidance_start_step} outside [0, {self.steps}]"
            )

    def attention(self) -> AttentionConfig:
        return AttentionConfig(d_model=self.d_model, num_heads=self.num_heads, w_img=self.w_img)

    def digest(self) -> str:
        return digest_obj(
            {
                "canvas": list(self.canvas),
                "latent_size": list(self.latent_size),
                "d_model": self.d_model,
                "num_heads": self.num_heads,
                "w_img": self.w_img,
                "steps": self.steps,
                "schedule": self.schedule.to_entries(),
                "guidance_start_step": self.guidance_start_step,
                "num_tokens": self.num_tokens,
                "seed": self.seed,
            }
        )


def _downsample(pixels: np.ndarray, size: tuple[int, int]) -> np.ndarray:
    """Block-mean downsample to (h, w); exact when sizes divide evenly."""
    target_h, target_w = size
    img = Image.fromarray(pixels).resize((target_w, target_h), Image.Resampling.BOX)
    return np.asarray(img).astype(np.float32) / 255.0


class SceneRenderer:
    """Hosts the denoiser and latent codec for render_scene."""

    def __init__(self, encoder: TokenEncoder, denoiser: torch.nn.Module | None = None) -> None:
        self.encoder = encoder
        self.denoiser = denoiser

    def _codec(self, config: RendererConfig) -> tuple[np.ndarray, np.ndarray]:
        enc = rng_for(derive_seed(config.seed, "codec-enc")).standard_normal((3, config.d_model))
        dec = rng_for(derive_seed(config.seed, "codec-dec")).standard_normal((config.d_model, 3))
        return enc.astype(np.float32), dec.astype(np.float32)

    def encode_to_latent(self, pixels: np.ndarray, config: RendererConfig) -> torch.Tensor:
        enc, _ = self._codec(config)
        small = _downsample(pixels, config.latent_size)
        return torch.from_numpy(small @ enc)

    def decode_latent(self, latent: torch.Tensor, config: RendererConfig) -> np.ndarray:
        _, dec = self._codec(config)
        raw = latent.detach().numpy() @ dec
        lo, hi = float(raw.min()), float(raw.max())
        scaled = (raw - lo) / (hi - lo) if hi > lo else np.zeros_like(raw)
        small = np.clip(np.rint(scaled * 255.0), 0, 255).astype(np.uint8)
        canvas_h, canvas_w = config.canvas
        img = Image.fromarray(small).resize((canvas_w, canvas_h), Image.Resampling.NEAREST)
        return np.asarray(img)

    def build_bundles(
        self,
        layered: LayeredPrompts,
        elements: Sequence[ElementImage],
        stitched: StitchedImage,
        config: RendererConfig,
    ) -> list[RegionTokenBundle]:
        """Per-region token bundles: FG and BG from their own prompt and
        element, global from the concatenated prompt and the stitched image."""
        d, n = config.d_model, config.num_tokens
        bg = next(e for e in elements if e.kind == ElementKind.BACKGROUND)
        fg_by_id = {e.character_id: e for e in elements if e.kind == ElementKind.FOREGROUND}
        bundles = [
            RegionTokenBundle(
                region_id=BACKGROUND_REGION,
                text_tokens=self.encoder.encode_text(layered.bg_prompt, d, n),
                image_tokens=self.encoder.encode_image(bg.pixels, d, n),
            ),
            RegionTokenBundle(
                region_id=GLOBAL_REGION,
                text_tokens=self.encoder.encode_text(layered.global_prompt, d, n),
                image_tokens=self.encoder.encode_image(stitched.pixels, d, n),
            ),
        ]
        for character_id, prompt in layered.fg_prompts.items():
            element = fg_by_id.get(character_id)
            if element is None:
                raise ConfigError(f"no foreground element for {character_id!r}")
            bundles.append(
                RegionTokenBundle(
                    region_id=character_id,
                    text_tokens=self.encoder.encode_text(prompt, d, n),
                    image_tokens=self.encoder.encode_image(element.pixels, d, n),
                )
            )
        return bundles

    def render(
        self,
        stitched: StitchedImage,
        layered: LayeredPrompts,
        elements: Sequence[ElementImage],
        layouts: Sequence[Layout],
        config: RendererConfig,
    ) -> RenderedScene:
        latent_h, latent_w = config.latent_size
        masks = rasterize_masks(list(layouts), latent_h, latent_w)
        bundles = self.build_bundles(layered, elements, stitched, config)

        clean = self.encode_to_latent(stitched.pixels, config)
        noised = forward_diffuse(
            clean,
            level=config.guidance_start_step,
            steps=config.steps,
            seed=derive_seed(config.seed, "guidance-noise", stitched.scene_index),
        )
        denoiser = self.denoiser or ToyDenoiser(config.attention(), seed=config.seed)
        result = toy_denoise(
            noised,
            bundles,
            masks,
            config.schedule,
            config.steps,
            seed=config.seed,
            denoiser=denoiser,
        )
        pixels = self.decode_latent(result.latent, config)
        return RenderedScene(
            scene_index=stitched.scene_index,
            pixels=pixels,
            renderer_config_digest=config.digest(),
            lambda_trace=result.lambda_trace,
        )


def render_scene(
    stitched: StitchedImage,
    layered: LayeredPrompts,
    elements: Sequence[ElementImage],
    layouts: Sequence[Layout],
    renderer: SceneRenderer,
    config: RendererConfig,
) -> RenderedScene:
    """Encode the stitched guidance, forward-diffuse, denoise through SA-CA."""
    return renderer.render(stitched, layered, elements, layouts, config)


def renderer_config_from_dict(doc: dict[str, Any]) -> RendererConfig:
    kwargs: dict[str, Any] = {}
    for key in ("d_model", "num_heads", "w_img", "steps", "guidance_start_step", "num_tokens", "seed"):
        if key in doc:
            kwargs[key] = doc[key]
    if "canvas" in doc:
        kwargs["canvas"] = tuple(doc["canvas"])
    if "latent_size" in doc:
        kwargs["latent_size"] = tuple(doc["latent_size"])
    if "schedule" in doc:
        kwargs["schedule"] = GlobalBlendSchedule.from_entries(
            doc["schedule"], doc.get("steps")
        )
    return RendererConfig(**kwargs)

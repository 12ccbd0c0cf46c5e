"""Semantic-aware cross-attention: region-masked text+image attention.

The layer applies scaled-dot-product multi-head cross-attention twice per
region (a text branch plus a weighted image branch whose keys/values are
mean-aligned to the text statistics) and blends the per-region composite
with a whole-grid global branch using the stepwise schedule weight.

All operations are pure torch functions of their inputs and stay
differentiable, so a checkpoint-loaded host can backstop them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch

from ..errors import (
    ConfigError,
    DimensionMismatch,
    EmptyTokens,
    MissingBundle,
)
from .masks import GLOBAL_REGION, RegionMaskSet
from .schedule import GlobalBlendSchedule, lambda_at


@dataclass(frozen=True)
class AttentionConfig:
    d_model: int
    num_heads: int = 1
    w_img: float = 1.0

    def __post_init__(self) -> None:
        if self.d_model % self.num_heads != 0:
            raise ConfigError(
                f"d_model {self.d_model} not divisible by {self.num_heads} heads"
            )


def _as_tokens(tokens: torch.Tensor | np.ndarray) -> torch.Tensor:
    out = torch.as_tensor(tokens)
    if out.ndim != 2:
        raise DimensionMismatch(f"token matrix must be 2-D, got shape {tuple(out.shape)}")
    return out


@dataclass
class RegionTokenBundle:
    """Text and image token sequences for one region."""

    region_id: str
    text_tokens: torch.Tensor
    image_tokens: torch.Tensor

    def __post_init__(self) -> None:
        self.text_tokens = _as_tokens(self.text_tokens)
        self.image_tokens = _as_tokens(self.image_tokens)
        if self.image_tokens.shape[0] > 0 and self.text_tokens.shape[-1] != self.image_tokens.shape[-1]:
            raise DimensionMismatch(
                "text and image tokens must share the embedding width: "
                f"{self.text_tokens.shape[-1]} vs {self.image_tokens.shape[-1]}"
            )

    def with_projection(self, text_proj: torch.Tensor, image_proj: torch.Tensor) -> "RegionTokenBundle":
        return RegionTokenBundle(
            region_id=self.region_id,
            text_tokens=self.text_tokens @ text_proj,
            image_tokens=self.image_tokens @ image_proj,
        )


def adain_mean_align(
    image_kv: tuple[torch.Tensor, torch.Tensor],
    text_kv: tuple[torch.Tensor, torch.Tensor],
) -> tuple[torch.Tensor, torch.Tensor]:
    """Shift image keys/values so their per-channel token means match the text's."""
    k_img, v_img = image_kv
    k_txt, v_txt = text_kv
    if k_img.shape[0] == 0 or v_img.shape[0] == 0:
        raise EmptyTokens("image token sequence is empty")
    if k_img.shape[-1] != k_txt.shape[-1] or v_img.shape[-1] != v_txt.shape[-1]:
        raise DimensionMismatch("image and text K/V widths differ")
    k_aligned = k_img - k_img.mean(dim=0, keepdim=True) + k_txt.mean(dim=0, keepdim=True)
    v_aligned = v_img - v_img.mean(dim=0, keepdim=True) + v_txt.mean(dim=0, keepdim=True)
    return k_aligned, v_aligned


def scaled_dot_product_attention(
    query: torch.Tensor,
    key: torch.Tensor,
    value: torch.Tensor,
    num_heads: int,
) -> torch.Tensor:
    """Multi-head attention over flat (n, d) queries and (m, d) keys/values."""
    n, d = query.shape
    head_dim = d // num_heads
    q = query.reshape(n, num_heads, head_dim).transpose(0, 1)
    k = key.reshape(-1, num_heads, head_dim).transpose(0, 1)
    v = value.reshape(-1, num_heads, head_dim).transpose(0, 1)
    scores = q @ k.transpose(-2, -1) / (head_dim**0.5)
    weights = torch.softmax(scores, dim=-1)
    out = weights @ v
    return out.transpose(0, 1).reshape(n, d)


def region_cross_attention(
    query_latent: torch.Tensor,
    bundle: RegionTokenBundle,
    mask: torch.Tensor | np.ndarray,
    config: AttentionConfig,
) -> torch.Tensor:
    """Text + weighted image cross-attention, zero outside the mask.

    Output cells inside the mask hold
    ``Attn(Q, K_txt, V_txt) + w_img * Attn(Q, aligned K_img, aligned V_img)``
    where the image K/V are AdaIN-mean aligned to the text statistics.
    """
    if query_latent.ndim != 3:
        raise DimensionMismatch(
            f"query latent must be (H, W, d), got shape {tuple(query_latent.shape)}"
        )
    height, width, d_model = query_latent.shape
    if d_model != config.d_model:
        raise DimensionMismatch(f"latent width {d_model} != config d_model {config.d_model}")
    mask_t = torch.as_tensor(np.asarray(mask), dtype=torch.bool)
    if mask_t.shape != (height, width):
        raise DimensionMismatch(
            f"mask shape {tuple(mask_t.shape)} != latent grid ({height}, {width})"
        )
    dtype = query_latent.dtype
    text_tokens = bundle.text_tokens.to(dtype)
    image_tokens = bundle.image_tokens.to(dtype)
    if text_tokens.shape[-1] != d_model:
        raise DimensionMismatch(
            f"token width {text_tokens.shape[-1]} != latent width {d_model}"
        )

    flat_q = query_latent.reshape(height * width, d_model)
    text_out = scaled_dot_product_attention(flat_q, text_tokens, text_tokens, config.num_heads)
    k_img, v_img = adain_mean_align(
        (image_tokens, image_tokens), (text_tokens, text_tokens)
    )
    image_out = scaled_dot_product_attention(flat_q, k_img, v_img, config.num_heads)
    combined = text_out + config.w_img * image_out
    out = combined.reshape(height, width, d_model) * mask_t.unsqueeze(-1).to(dtype)
    return out


def saca_forward(
    query_latent: torch.Tensor,
    bundles: list[RegionTokenBundle],
    masks: RegionMaskSet,
    step: int,
    schedule: GlobalBlendSchedule,
    config: AttentionConfig,
) -> torch.Tensor:
    """Blend per-region attention with the global branch at weight lambda_t.

    ``regional`` scatters one masked attention result per character region
    plus the background region; ``global`` attends over the whole grid with
    the global bundle. The output is (1 - lambda_t) * regional +
    lambda_t * global.
    """
    by_region = {b.region_id: b for b in bundles}
    if GLOBAL_REGION not in by_region:
        raise MissingBundle("no global token bundle supplied")
    if (masks.latent_height, masks.latent_width) != tuple(query_latent.shape[:2]):
        raise DimensionMismatch(
            f"mask grid {(masks.latent_height, masks.latent_width)} != "
            f"latent grid {tuple(query_latent.shape[:2])}"
        )

    regional = torch.zeros_like(query_latent)
    for region_id in masks.region_ids():
        bundle = by_region.get(region_id)
        if bundle is None:
            raise MissingBundle(f"mask region {region_id!r} lacks a token bundle")
        regional = regional + region_cross_attention(
            query_latent, bundle, masks.mask_for(region_id), config
        )
    global_out = region_cross_attention(
        query_latent, by_region[GLOBAL_REGION], masks.global_mask, config
    )
    lam = lambda_at(step, schedule)
    return (1.0 - lam) * regional + lam * global_out


__all__ = [
    "AttentionConfig",
    "RegionTokenBundle",
    "adain_mean_align",
    "region_cross_attention",
    "saca_forward",
    "scaled_dot_product_attention",
]

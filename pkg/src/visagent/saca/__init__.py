"""Semantic-aware cross-attention layer and its toy denoising host."""

from .attention import (
    AttentionConfig,
    RegionTokenBundle,
    adain_mean_align,
    region_cross_attention,
    saca_forward,
    scaled_dot_product_attention,
)
from .denoiser import DenoiseResult, ToyDenoiser, forward_diffuse, toy_denoise
from .masks import BACKGROUND_REGION, GLOBAL_REGION, RegionMaskSet, grid_rect, rasterize_masks
from .schedule import GlobalBlendSchedule, default_schedule, lambda_at

__all__ = [
    "AttentionConfig",
    "BACKGROUND_REGION",
    "DenoiseResult",
    "GLOBAL_REGION",
    "GlobalBlendSchedule",
    "RegionMaskSet",
    "RegionTokenBundle",
    "ToyDenoiser",
    "adain_mean_align",
    "default_schedule",
    "forward_diffuse",
    "grid_rect",
    "lambda_at",
    "rasterize_masks",
    "region_cross_attention",
    "saca_forward",
    "scaled_dot_product_attention",
    "toy_denoise",
]

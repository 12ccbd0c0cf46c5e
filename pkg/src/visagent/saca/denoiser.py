"""Small frozen-weight denoiser hosting the SA-CA layer.

The host runs a deterministic DDIM loop (eta = 0) over a linear
alpha-bar ramp. Weights are drawn once from a seeded generator and kept
untrained: the point is exercising the attention layer's contracts at toy
scale, not producing meaningful pictures. Any module with the same
forward signature (for instance a checkpoint-loaded UNet whose
cross-attention blocks were swapped for saca_forward) can stand in for
ToyDenoiser in the render path.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch

from ..errors import ConfigError
from .attention import AttentionConfig, RegionTokenBundle, saca_forward
from .masks import RegionMaskSet
from .schedule import GlobalBlendSchedule, lambda_at

_MIN_ALPHA_BAR = 0.02


def alpha_bar(level: int, steps: int) -> float:
    """Signal fraction at noise level ``level`` (0 = clean, steps = noisiest)."""
    return 1.0 - (1.0 - _MIN_ALPHA_BAR) * level / steps


def forward_diffuse(
    latent: torch.Tensor, level: int, steps: int, seed: int
) -> torch.Tensor:
    """q-sample the latent to the given noise level; level 0 is the identity."""
    if level == 0:
        return latent.clone()
    abar = alpha_bar(level, steps)
    generator = torch.Generator().manual_seed(seed)
    noise = torch.randn(latent.shape, generator=generator, dtype=latent.dtype)
    return (abar**0.5) * latent + ((1.0 - abar) ** 0.5) * noise


def _time_features(step: int, d_model: int, dtype: torch.dtype) -> torch.Tensor:
    half = d_model // 2
    freqs = torch.exp(
        -torch.arange(half, dtype=dtype) * (torch.log(torch.tensor(10000.0, dtype=dtype)) / max(half - 1, 1))
    )
    angles = step * freqs
    feats = torch.cat([torch.sin(angles), torch.cos(angles)])
    if feats.shape[0] < d_model:
        feats = torch.cat([feats, torch.zeros(d_model - feats.shape[0], dtype=dtype)])
    return feats


class ToyDenoiser(torch.nn.Module):
    """Residual mixing block + SA-CA + linear head, all frozen."""

    def __init__(self, attention: AttentionConfig, seed: int = 0) -> None:
        super().__init__()
        self.attention = attention
        d = attention.d_model
        generator = torch.Generator().manual_seed(seed)

        def mat() -> torch.Tensor:
            return torch.randn(d, d, generator=generator) / d**0.5

        self.register_buffer("w_query", mat())
        self.register_buffer("w_text", mat())
        self.register_buffer("w_image", mat())
        self.register_buffer("w_mix_in", mat())
        self.register_buffer("w_mix_out", mat())
        self.register_buffer("w_head", mat())

    def forward(
        self,
        latent: torch.Tensor,
        step: int,
        bundles: list[RegionTokenBundle],
        masks: RegionMaskSet,
        schedule: GlobalBlendSchedule,
    ) -> torch.Tensor:
        dtype = latent.dtype
        h = latent + _time_features(step, self.attention.d_model, dtype)
        h = h + 0.5 * torch.nn.functional.gelu(h @ self.w_mix_in.to(dtype)) @ self.w_mix_out.to(dtype)
        query = h @ self.w_query.to(dtype)
        projected = [
            b.with_projection(self.w_text.to(dtype), self.w_image.to(dtype)) for b in bundles
        ]
        h = h + saca_forward(query, projected, masks, step, schedule, self.attention)
        return h @ self.w_head.to(dtype)


@dataclass
class DenoiseResult:
    latent: torch.Tensor
    lambda_trace: tuple[float, ...]


def toy_denoise(
    initial_latent: torch.Tensor,
    bundles: list[RegionTokenBundle],
    masks: RegionMaskSet,
    schedule: GlobalBlendSchedule,
    steps: int,
    seed: int,
    attention: AttentionConfig | None = None,
    denoiser: torch.nn.Module | None = None,
) -> DenoiseResult:
    """Run the DDIM loop from the noisiest level down; returns the λ trace.

    Deterministic given the seed: eta is zero so the only randomness is
    the seeded weight draw.
    """
    if schedule.total_steps != steps:
        raise ConfigError(
            f"schedule covers {schedule.total_steps} steps but {steps} were requested"
        )
    if denoiser is None:
        if attention is None:
            attention = AttentionConfig(d_model=initial_latent.shape[-1])
        denoiser = ToyDenoiser(attention, seed=seed)

    x = initial_latent
    trace: list[float] = []
    for step in range(1, steps + 1):
        level = steps - step + 1
        eps = denoiser(x, step, bundles, masks, schedule)
        abar_now = alpha_bar(level, steps)
        abar_next = alpha_bar(level - 1, steps)
        x0_pred = (x - (1.0 - abar_now) ** 0.5 * eps) / abar_now**0.5
        x = abar_next**0.5 * x0_pred + (1.0 - abar_next) ** 0.5 * eps
        trace.append(lambda_at(step, schedule))
    return DenoiseResult(latent=x, lambda_trace=tuple(trace))


__all__ = [
    "DenoiseResult",
    "ToyDenoiser",
    "alpha_bar",
    "forward_diffuse",
    "toy_denoise",
]

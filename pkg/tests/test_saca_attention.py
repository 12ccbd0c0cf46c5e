"""Attention-layer contracts checked against dense reference implementations.

The reference oracles here recompute softmax attention and the mean
alignment with plain numpy loops, independent of the torch code paths.
"""

import numpy as np
import pytest
import torch

from visagent.errors import DimensionMismatch, EmptyTokens, MissingBundle
from visagent.image.types import Layout
from visagent.saca import (
    AttentionConfig,
    GlobalBlendSchedule,
    RegionTokenBundle,
    adain_mean_align,
    rasterize_masks,
    region_cross_attention,
    saca_forward,
)
from visagent.saca.masks import BACKGROUND_REGION, GLOBAL_REGION


def reference_attention(q: np.ndarray, k: np.ndarray, v: np.ndarray, heads: int) -> np.ndarray:
    n, d = q.shape
    dh = d // heads
    out = np.zeros((n, d), dtype=np.float64)
    for h in range(heads):
        qs, ks, vs = (m[:, h * dh : (h + 1) * dh] for m in (q, k, v))
        for i in range(n):
            scores = np.array([qs[i] @ ks[j] / np.sqrt(dh) for j in range(len(ks))])
            weights = np.exp(scores - scores.max())
            weights /= weights.sum()
            out[i, h * dh : (h + 1) * dh] = sum(w * vs[j] for j, w in enumerate(weights))
    return out


def reference_region_attention(q_grid, text, image, mask, heads, w_img):
    height, width, d = q_grid.shape
    flat = q_grid.reshape(-1, d)
    aligned = image - image.mean(axis=0) + text.mean(axis=0)
    out = reference_attention(flat, text, text, heads) + w_img * reference_attention(
        flat, aligned, aligned, heads
    )
    out = out.reshape(height, width, d)
    return out * mask[..., None]


def random_instance(rng, height=2, width=2, d=4, heads=1, n_text=2, n_img=1):
    q = rng.standard_normal((height, width, d))
    text = rng.standard_normal((n_text, d))
    image = rng.standard_normal((n_img, d))
    mask = rng.random((height, width)) > 0.3
    return q, text, image, mask


def test_adain_fixed_point():
    text = torch.tensor([[1.0, 2.0], [3.0, 4.0]], dtype=torch.float64)
    image = torch.tensor([[0.0, 1.0], [4.0, 5.0]], dtype=torch.float64)
    # image channel means already equal text channel means (2, 3)
    k, v = adain_mean_align((image, image), (text, text))
    assert torch.allclose(k, image)
    assert torch.allclose(v, image)


def test_adain_single_token_collapses_to_text_means():
    image = torch.tensor([[3.0, 4.0]], dtype=torch.float64)
    text = torch.tensor([[0.0, 1.0], [2.0, 3.0]], dtype=torch.float64)  # means (1, 2)
    k, _ = adain_mean_align((image, image), (text, text))
    assert torch.allclose(k, torch.tensor([[1.0, 2.0]], dtype=torch.float64))


def test_adain_moment_contract_random():
    rng = np.random.default_rng(1)
    for _ in range(100):
        n_img, n_txt, d = rng.integers(1, 6), rng.integers(1, 6), int(rng.integers(2, 9))
        image = torch.tensor(rng.standard_normal((n_img, d)))
        text = torch.tensor(rng.standard_normal((n_txt, d)))
        k, v = adain_mean_align((image, image), (text, text))
        assert torch.allclose(k.mean(0), text.mean(0), atol=1e-6)
        assert torch.allclose(v.mean(0), text.mean(0), atol=1e-6)


def test_adain_rejects_empty_image_tokens():
    text = torch.ones((2, 4), dtype=torch.float64)
    empty = torch.ones((0, 4), dtype=torch.float64)
    with pytest.raises(EmptyTokens):
        adain_mean_align((empty, empty), (text, text))


def test_region_attention_matches_dense_oracle_tiny():
    rng = np.random.default_rng(7)
    q, text, image, mask = random_instance(rng)
    config = AttentionConfig(d_model=4, num_heads=1, w_img=1.0)
    bundle = RegionTokenBundle("r", torch.tensor(text), torch.tensor(image))
    out = region_cross_attention(torch.tensor(q), bundle, mask, config)
    expected = reference_region_attention(q, text, image, mask, 1, 1.0)
    assert np.allclose(out.numpy(), expected, atol=1e-5)


@pytest.mark.parametrize("heads", [1, 2, 4])
def test_region_attention_matches_dense_oracle_randomized(heads):
    rng = np.random.default_rng(heads)
    for _ in range(70):
        height, width = int(rng.integers(1, 5)), int(rng.integers(1, 5))
        d = heads * int(rng.integers(1, 9) // heads + 1) * heads
        d = min(d, 8) if heads <= 2 else 8
        if d % heads:
            d = heads
        n_text, n_img = int(rng.integers(1, 5)), int(rng.integers(1, 5))
        w_img = float(rng.random())
        q, text, image, mask = random_instance(rng, height, width, d, heads, n_text, n_img)
        config = AttentionConfig(d_model=d, num_heads=heads, w_img=w_img)
        bundle = RegionTokenBundle("r", torch.tensor(text), torch.tensor(image))
        out = region_cross_attention(torch.tensor(q), bundle, mask, config)
        expected = reference_region_attention(q, text, image, mask, heads, w_img)
        assert np.allclose(out.numpy(), expected, atol=1e-5)


def test_region_attention_text_only_when_image_weight_zero():
    rng = np.random.default_rng(3)
    q, text, image, mask = random_instance(rng)
    config = AttentionConfig(d_model=4, num_heads=1, w_img=0.0)
    bundle = RegionTokenBundle("r", torch.tensor(text), torch.tensor(image))
    out = region_cross_attention(torch.tensor(q), bundle, mask, config)
    flat = q.reshape(-1, 4)
    expected = reference_attention(flat, text, text, 1).reshape(2, 2, 4) * mask[..., None]
    assert np.allclose(out.numpy(), expected, atol=1e-5)


def test_region_attention_zero_mask_gives_zero_grid():
    rng = np.random.default_rng(4)
    q, text, image, _ = random_instance(rng)
    config = AttentionConfig(d_model=4)
    bundle = RegionTokenBundle("r", torch.tensor(text), torch.tensor(image))
    out = region_cross_attention(torch.tensor(q), bundle, np.zeros((2, 2), bool), config)
    assert torch.count_nonzero(out) == 0


def test_region_attention_dimension_mismatch():
    config = AttentionConfig(d_model=4)
    bundle = RegionTokenBundle("r", torch.ones((2, 4)), torch.ones((1, 4)))
    with pytest.raises(DimensionMismatch):
        region_cross_attention(torch.ones((2, 2, 4)), bundle, np.ones((3, 3), bool), config)
    with pytest.raises(DimensionMismatch):
        region_cross_attention(torch.ones((2, 2, 6)), bundle, np.ones((2, 2), bool), config)


def _bundles_and_masks(rng, height, width, d, characters=("a", "b")):
    layouts = []
    for i, cid in enumerate(characters):
        x0, y0 = rng.uniform(0, 0.5, 2)
        layouts.append(
            Layout(
                scene_index=0,
                character_id=cid,
                bbox=(float(x0), float(y0), float(x0 + 0.4), float(y0 + 0.4)),
                z_order=i,
            )
        )
    masks = rasterize_masks(layouts, height, width)
    bundles = []
    for region in [*characters, BACKGROUND_REGION, GLOBAL_REGION]:
        bundles.append(
            RegionTokenBundle(
                region,
                torch.tensor(rng.standard_normal((3, d))),
                torch.tensor(rng.standard_normal((2, d))),
            )
        )
    return bundles, masks


def saca_at_lambda(q, bundles, masks, lam, config):
    """saca_forward with a single-range schedule pinned to one lambda."""
    schedule = GlobalBlendSchedule(entries=((1, 1, lam),), total_steps=1)
    return saca_forward(q, bundles, masks, 1, schedule, config)


def test_saca_blend_limits_and_linearity_randomized():
    rng = np.random.default_rng(11)
    for trial in range(100):
        height = int(rng.integers(2, 9))
        width = int(rng.integers(2, 9))
        heads = int(rng.choice([1, 2, 4]))
        d = heads * int(rng.integers(1, 17) // heads + 1)
        d = min(d - d % heads, 16) or heads
        config = AttentionConfig(d_model=d, num_heads=heads, w_img=float(rng.random()))
        bundles, masks = _bundles_and_masks(rng, height, width, d)
        q = torch.tensor(rng.standard_normal((height, width, d)))

        at0 = saca_at_lambda(q, bundles, masks, 0.0, config)
        at1 = saca_at_lambda(q, bundles, masks, 1.0, config)
        at_half = saca_at_lambda(q, bundles, masks, 0.5, config)

        regional = torch.zeros_like(q)
        for bundle in bundles:
            if bundle.region_id == GLOBAL_REGION:
                continue
            regional += region_cross_attention(
                q, bundle, masks.mask_for(bundle.region_id), config
            )
        global_bundle = next(b for b in bundles if b.region_id == GLOBAL_REGION)
        global_out = region_cross_attention(q, global_bundle, masks.global_mask, config)

        assert torch.allclose(at0, regional, atol=1e-5)
        assert torch.allclose(at1, global_out, atol=1e-5)
        assert torch.allclose(at_half, 0.5 * (at0 + at1), atol=1e-5)


def test_saca_reduces_to_plain_attention_when_regional_equals_global():
    # one character covering the whole canvas, same bundle for FG and global
    rng = np.random.default_rng(5)
    d = 8
    config = AttentionConfig(d_model=d, num_heads=2, w_img=0.7)
    layouts = [Layout(scene_index=0, character_id="solo", bbox=(0.0, 0.0, 1.0, 1.0), z_order=0)]
    masks = rasterize_masks(layouts, 4, 4)
    text = torch.tensor(rng.standard_normal((3, d)))
    image = torch.tensor(rng.standard_normal((2, d)))
    shared = dict(text_tokens=text, image_tokens=image)
    bundles = [
        RegionTokenBundle("solo", **shared),
        RegionTokenBundle(BACKGROUND_REGION, **shared),
        RegionTokenBundle(GLOBAL_REGION, **shared),
    ]
    q = torch.tensor(rng.standard_normal((4, 4, d)))
    for lam in (0.0, 0.3, 1.0):
        out = saca_at_lambda(q, bundles, masks, lam, config)
        plain = region_cross_attention(q, bundles[2], masks.global_mask, config)
        assert torch.allclose(out, plain, atol=1e-5)


def test_saca_missing_bundle():
    rng = np.random.default_rng(6)
    config = AttentionConfig(d_model=4)
    bundles, masks = _bundles_and_masks(rng, 4, 4, 4)
    q = torch.tensor(rng.standard_normal((4, 4, 4)))
    without_bg = [b for b in bundles if b.region_id != BACKGROUND_REGION]
    with pytest.raises(MissingBundle):
        saca_at_lambda(q, without_bg, masks, 0.5, config)
    without_global = [b for b in bundles if b.region_id != GLOBAL_REGION]
    with pytest.raises(MissingBundle):
        saca_at_lambda(q, without_global, masks, 0.5, config)


def test_saca_locality_at_lambda_zero():
    rng = np.random.default_rng(9)
    d = 8
    config = AttentionConfig(d_model=d, num_heads=1, w_img=1.0)
    bundles, masks = _bundles_and_masks(rng, 6, 6, d)
    q = torch.tensor(rng.standard_normal((6, 6, d)))
    base = saca_at_lambda(q, bundles, masks, 0.0, config)

    perturbed = []
    for bundle in bundles:
        if bundle.region_id == "a":
            perturbed.append(
                RegionTokenBundle(
                    "a",
                    torch.tensor(rng.standard_normal((3, d))),
                    torch.tensor(rng.standard_normal((2, d))),
                )
            )
        else:
            perturbed.append(bundle)
    changed = saca_at_lambda(q, perturbed, masks, 0.0, config)

    outside_a = torch.tensor(~masks.character_masks["a"])
    assert torch.allclose(base[outside_a], changed[outside_a], atol=1e-12)


def test_saca_preserves_grid_shape():
    rng = np.random.default_rng(10)
    for height, width, d in [(1, 1, 4), (3, 5, 8), (8, 8, 16)]:
        config = AttentionConfig(d_model=d, num_heads=1)
        bundles, masks = _bundles_and_masks(rng, height, width, d, characters=("a",))
        q = torch.tensor(rng.standard_normal((height, width, d)))
        out = saca_at_lambda(q, bundles, masks, 0.4, config)
        assert out.shape == q.shape


def test_saca_gradient_matches_finite_differences():
    rng = np.random.default_rng(12)
    for trial in range(20):
        height, width = int(rng.integers(2, 4)), int(rng.integers(2, 4))
        heads = int(rng.choice([1, 2]))
        d = 4 * heads
        config = AttentionConfig(d_model=d, num_heads=heads, w_img=float(rng.random()))
        bundles, masks = _bundles_and_masks(rng, height, width, d, characters=("a",))
        q = torch.tensor(rng.standard_normal((height, width, d)), requires_grad=True)
        projection = torch.tensor(rng.standard_normal((height, width, d)))
        lam = float(rng.random())

        def scalar(latent):
            return (saca_at_lambda(latent, bundles, masks, lam, config) * projection).sum()

        (grad,) = torch.autograd.grad(scalar(q), q)

        # central finite differences on every coordinate of one query cell
        row, col = int(rng.integers(height)), int(rng.integers(width))
        eps = 1e-6
        for channel in range(d):
            bumped = q.detach().clone()
            bumped[row, col, channel] += eps
            plus = scalar(bumped).item()
            bumped[row, col, channel] -= 2 * eps
            minus = scalar(bumped).item()
            numeric = (plus - minus) / (2 * eps)
            analytic = grad[row, col, channel].item()
            scale = max(abs(numeric), abs(analytic), 1e-8)
            assert abs(numeric - analytic) / scale < 1e-3

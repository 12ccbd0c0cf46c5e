import numpy as np
import pytest

from visagent.backends import BackendSet
from visagent.errors import ConfigError
from visagent.image import (
    ElementKind,
    RendererConfig,
    SceneRenderer,
    SubjectStorage,
    generate_scene_elements,
    locate_subjects,
    render_scene,
    stitch,
)
from visagent.saca import GlobalBlendSchedule

from conftest import make_prompts


def assemble_scene(backends: BackendSet, layered=None):
    layered = layered or make_prompts(fg={"boy": "a boy standing"})
    storage = SubjectStorage()
    report = generate_scene_elements(layered, storage, backends.image, backends.encoder)
    bg = next(e for e in report.elements if e.kind == ElementKind.BACKGROUND)
    fg = [e for e in report.elements if e.kind == ElementKind.FOREGROUND]
    layouts = locate_subjects(layered, bg, fg, backends.layout)
    stitched = stitch(bg, fg, layouts, backends.segmentation)
    return layered, report.elements, layouts, stitched


def test_render_deterministic_for_same_inputs(mock_backends):
    layered, elements, layouts, stitched = assemble_scene(mock_backends)
    renderer = SceneRenderer(mock_backends.encoder)
    config = RendererConfig(seed=3)
    first = render_scene(stitched, layered, elements, layouts, renderer, config)
    second = render_scene(stitched, layered, elements, layouts, renderer, config)
    assert np.array_equal(first.pixels, second.pixels)
    assert first.lambda_trace == second.lambda_trace
    assert first.renderer_config_digest == second.renderer_config_digest


def test_render_thirty_step_trace(mock_backends):
    layered, elements, layouts, stitched = assemble_scene(mock_backends)
    renderer = SceneRenderer(mock_backends.encoder)
    rendered = render_scene(stitched, layered, elements, layouts, renderer, RendererConfig())
    assert rendered.lambda_trace == tuple([0.1] * 10 + [0.3] * 10 + [0.5] * 10)
    assert rendered.pixels.shape == stitched.pixels.shape


def test_guidance_start_zero_preserves_encoded_latent(mock_backends):
    layered, elements, layouts, stitched = assemble_scene(mock_backends)
    renderer = SceneRenderer(mock_backends.encoder)
    config = RendererConfig(guidance_start_step=0, seed=5)
    from visagent.saca.denoiser import forward_diffuse

    clean = renderer.encode_to_latent(stitched.pixels, config)
    noised = forward_diffuse(clean, level=0, steps=config.steps, seed=123)
    assert np.array_equal(clean.numpy(), noised.numpy())


def test_config_rejects_inconsistent_schedule():
    with pytest.raises(ConfigError):
        RendererConfig(steps=10)  # default schedule covers 30
    with pytest.raises(ConfigError):
        RendererConfig(guidance_start_step=99)
    config = RendererConfig(
        steps=10,
        schedule=GlobalBlendSchedule(entries=((1, 10, 0.2),), total_steps=10),
        guidance_start_step=5,
    )
    assert config.steps == 10


def test_render_output_resolution_matches_stitched(mock_backends):
    layered, elements, layouts, stitched = assemble_scene(mock_backends)
    renderer = SceneRenderer(mock_backends.encoder)
    rendered = render_scene(stitched, layered, elements, layouts, renderer, RendererConfig())
    assert rendered.pixels.shape == stitched.pixels.shape
    assert rendered.pixels.dtype == np.uint8


def test_config_digest_sensitive_to_fields():
    a = RendererConfig(seed=1)
    b = RendererConfig(seed=2)
    assert a.digest() != b.digest()
    assert a.digest() == RendererConfig(seed=1).digest()

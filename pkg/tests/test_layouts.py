import numpy as np
import pytest

from visagent.backends import ScriptedLayoutBackend, SpreadLayoutBackend
from visagent.errors import LayoutInvalid
from visagent.image import ElementImage, ElementKind, locate_subjects, validate_layout
from visagent.image.types import Layout

from conftest import make_prompts


def element(kind=ElementKind.FOREGROUND, cid="boy", size=(8, 8)):
    return ElementImage(
        kind=kind,
        scene_index=0,
        pixels=np.zeros((*size, 3), dtype=np.uint8),
        generation_seed=0,
        character_id=cid if kind == ElementKind.FOREGROUND else None,
    )


def test_validate_layout_well_formed():
    assert validate_layout((0.2, 0.3, 0.6, 0.9)) == []


def test_validate_layout_inverted_box():
    violations = validate_layout((0.6, 0.3, 0.2, 0.9))
    assert any("x_min" in v for v in violations)


def test_validate_layout_area_below_minimum():
    violations = validate_layout((0.0, 0.0, 0.01, 0.01), min_area=0.001)
    assert any("area" in v for v in violations)  # 1e-4 < 1e-3


def test_validate_layout_reports_all_violations():
    violations = validate_layout((1.2, 0.9, 0.1, 0.2))
    assert len(violations) >= 3


def test_locate_single_character_scripted():
    layered = make_prompts(fg={"boy": "a boy"})
    backend = ScriptedLayoutBackend([[(0.3, 0.4, 0.6, 0.95)]])
    layouts = locate_subjects(layered, element(ElementKind.BACKGROUND, None), [element()], backend)
    assert layouts == [
        Layout(scene_index=0, character_id="boy", bbox=(0.3, 0.4, 0.6, 0.95), z_order=0)
    ]


def test_locate_zero_characters():
    layered = make_prompts()
    backend = ScriptedLayoutBackend([])
    assert locate_subjects(layered, element(ElementKind.BACKGROUND, None), [], backend) == []
    assert len(backend.calls) == 0


def test_locate_assigns_unique_z_orders():
    layered = make_prompts(fg={"boy": "a boy", "giant": "a giant"})
    backend = SpreadLayoutBackend()
    layouts = locate_subjects(
        layered,
        element(ElementKind.BACKGROUND, None),
        [element(cid="boy"), element(cid="giant")],
        backend,
    )
    assert sorted(l.z_order for l in layouts) == [0, 1]
    assert [l.character_id for l in layouts] == ["boy", "giant"]
    for layout in layouts:
        assert validate_layout(layout) == []


def test_locate_backend_receives_prompts_and_images():
    layered = make_prompts(fg={"boy": "a boy"})
    backend = SpreadLayoutBackend()
    bg = element(ElementKind.BACKGROUND, None)
    fg = element()
    locate_subjects(layered, bg, [fg], backend)
    prompts, bg_image, fg_images = backend.last_inputs
    assert prompts["bg"] == layered.bg_prompt
    assert prompts["fg"] == dict(layered.fg_prompts)
    assert np.array_equal(bg_image, bg.pixels)
    assert np.array_equal(fg_images["boy"], fg.pixels)


def test_locate_retries_invalid_then_succeeds():
    layered = make_prompts(fg={"boy": "a boy"})
    backend = ScriptedLayoutBackend([[(0.9, 0.1, 0.2, 0.5)], [(0.3, 0.4, 0.6, 0.95)]])
    layouts = locate_subjects(layered, element(ElementKind.BACKGROUND, None), [element()], backend)
    assert layouts[0].bbox == (0.3, 0.4, 0.6, 0.95)
    assert len(backend.calls) == 2


def test_locate_surfaces_layout_invalid_after_bounded_retries():
    bad = [(0.9, 0.1, 0.2, 0.5)]
    layered = make_prompts(fg={"boy": "a boy"})
    backend = ScriptedLayoutBackend([bad, bad, bad])
    with pytest.raises(LayoutInvalid):
        locate_subjects(
            layered, element(ElementKind.BACKGROUND, None), [element()], backend, retries=2
        )

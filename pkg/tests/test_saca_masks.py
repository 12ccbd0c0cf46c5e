import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from visagent.image.types import Layout
from visagent.saca import grid_rect, rasterize_masks


def layout(bbox, z=0, cid="c0"):
    return Layout(scene_index=0, character_id=cid, bbox=bbox, z_order=z)


def test_full_cover_box():
    masks = rasterize_masks([layout((0.0, 0.0, 1.0, 1.0))], 8, 8)
    assert masks.character_masks["c0"].all()
    assert not masks.bg_mask.any()


def test_quarter_box_cells_by_direct_arithmetic():
    # floor(0.25*8)=2, ceil(0.75*8)=6: a 4x4 block over rows/cols 2..5
    masks = rasterize_masks([layout((0.25, 0.25, 0.75, 0.75))], 8, 8)
    mask = masks.character_masks["c0"]
    expected = np.zeros((8, 8), dtype=bool)
    expected[2:6, 2:6] = True
    assert np.array_equal(mask, expected)
    assert np.array_equal(masks.bg_mask, ~expected)


def test_overlap_assigned_to_higher_z_order():
    lower = layout((0.0, 0.0, 0.75, 1.0), z=0, cid="under")
    upper = layout((0.25, 0.0, 1.0, 1.0), z=1, cid="over")
    masks = rasterize_masks([lower, upper], 8, 8)
    total = masks.partition_sum()
    assert (total == 1).all()
    # the contested band [2, 6) belongs to the higher z-order
    assert masks.character_masks["over"][:, 2:6].all()
    assert not masks.character_masks["under"][:, 2:6].any()


def test_fully_occluded_region_keeps_empty_mask():
    hidden = layout((0.3, 0.3, 0.6, 0.6), z=0, cid="hidden")
    cover = layout((0.0, 0.0, 1.0, 1.0), z=1, cid="cover")
    masks = rasterize_masks([hidden, cover], 8, 8)
    assert not masks.character_masks["hidden"].any()
    assert masks.character_masks["cover"].all()
    assert (masks.partition_sum() == 1).all()


def test_grid_rect_clips_to_grid():
    assert grid_rect((0.0, 0.0, 1.0, 1.0), 8, 8) == (0, 8, 0, 8)
    assert grid_rect((0.99, 0.99, 1.0, 1.0), 8, 8) == (7, 8, 7, 8)


def test_degenerate_bbox_surfaces():
    import pytest

    from visagent.errors import DegenerateRegion

    class RawLayout:
        # bypasses Layout validation to exercise the rasterizer's own guard
        character_id = "raw"
        z_order = 0
        bbox = (0.5, 0.5, 0.4, 0.6)

    with pytest.raises(DegenerateRegion):
        rasterize_masks([RawLayout()], 8, 8)


@st.composite
def layout_sets(draw):
    count = draw(st.integers(min_value=0, max_value=4))
    layouts = []
    for i in range(count):
        x0 = draw(st.floats(min_value=0.0, max_value=0.9))
        y0 = draw(st.floats(min_value=0.0, max_value=0.9))
        x1 = draw(st.floats(min_value=x0 + 0.05, max_value=1.0))
        y1 = draw(st.floats(min_value=y0 + 0.05, max_value=1.0))
        layouts.append(layout((x0, y0, x1, y1), z=i, cid=f"c{i}"))
    return layouts


@given(layout_sets(), st.integers(min_value=2, max_value=16))
@settings(max_examples=200, deadline=None)
def test_masks_partition_grid(layouts, size):
    masks = rasterize_masks(layouts, size, size)
    assert (masks.partition_sum() == 1).all()
    assert masks.global_mask.all()

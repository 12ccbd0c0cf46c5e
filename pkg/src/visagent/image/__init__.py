"""Image module: element generation, subject placement, stitching, rendering."""

from .elements import ElementGenerationReport, element_key, generate_scene_elements
from .layout import locate_subjects, validate_layout
from .pipeline import ElementVerdict, run_image_module
from .rendering import RendererConfig, SceneRenderer, render_scene, renderer_config_from_dict
from .stitching import fit_into_rect, stitch
from .types import (
    ElementImage,
    ElementKind,
    Layout,
    ReferenceRecord,
    RenderedScene,
    SceneAssembly,
    StitchedImage,
    SubjectStorage,
)

__all__ = [
    "ElementGenerationReport",
    "ElementImage",
    "ElementKind",
    "ElementVerdict",
    "Layout",
    "ReferenceRecord",
    "RenderedScene",
    "RendererConfig",
    "SceneAssembly",
    "SceneRenderer",
    "StitchedImage",
    "SubjectStorage",
    "element_key",
    "fit_into_rect",
    "generate_scene_elements",
    "locate_subjects",
    "render_scene",
    "renderer_config_from_dict",
    "run_image_module",
    "stitch",
    "validate_layout",
]

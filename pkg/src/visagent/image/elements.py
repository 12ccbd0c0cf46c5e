"""Scene element generation with subject-storage reference threading."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..backends.base import ImageGeneratorBackend, TokenEncoder
from ..errors import BackendError
from ..hashing import derive_seed
from ..story.types import LayeredPrompts
from .types import ElementImage, ElementKind, ReferenceRecord, SubjectStorage


@dataclass
class ElementGenerationReport:
    """Per-element outcomes; failures keep the rest of the batch usable."""

    elements: list[ElementImage] = field(default_factory=list)
    failures: list[tuple[str, str]] = field(default_factory=list)

    def element(self, key: str) -> ElementImage:
        for element in self.elements:
            if element_key(element) == key:
                return element
        raise KeyError(key)


def element_key(element: ElementImage) -> str:
    if element.kind == ElementKind.BACKGROUND:
        return "bg"
    return f"fg_{element.character_id}"


def generate_scene_elements(
    layered: LayeredPrompts,
    storage: SubjectStorage,
    generator: ImageGeneratorBackend,
    encoder: TokenEncoder,
    canvas: tuple[int, int] = (64, 64),
    fg_size: tuple[int, int] | None = None,
    seed: int = 0,
    attempts: dict[str, int] | None = None,
    d_model: int = 32,
    only: set[str] | None = None,
) -> ElementGenerationReport:
    """One BG element plus one FG element per foreground prompt.

    Characters already present in storage are generated with their most
    recent reference record; newly generated characters are appended to
    storage afterwards. A failed element is reported individually, and a
    rejection round passes ``only`` so just those elements are redone.
    """
    attempts = attempts or {}
    fg_size = fg_size or (canvas[0] // 2, canvas[1] // 2)
    report = ElementGenerationReport()

    scene = layered.scene_index
    bg_attempt = attempts.get("bg", 0)
    if only is None or "bg" in only:
        try:
            bg_seed = derive_seed(seed, "scene", scene, "bg", bg_attempt)
            bg_pixels = generator.generate(
                layered.bg_prompt, reference_record=None, seed=bg_seed, size=canvas
            )
            report.elements.append(
                ElementImage(
                    kind=ElementKind.BACKGROUND,
                    scene_index=scene,
                    pixels=bg_pixels,
                    generation_seed=bg_seed,
                )
            )
        except BackendError as exc:
            report.failures.append(("bg", str(exc)))

    for character_id, prompt in layered.fg_prompts.items():
        key = f"fg_{character_id}"
        if only is not None and key not in only:
            continue
        attempt = attempts.get(key, 0)
        element_seed = derive_seed(seed, "scene", scene, "fg", character_id, attempt)
        reference = storage.latest(character_id)
        try:
            pixels = generator.generate(
                prompt, reference_record=reference, seed=element_seed, size=fg_size
            )
        except BackendError as exc:
            report.failures.append((key, str(exc)))
            continue
        element = ElementImage(
            kind=ElementKind.FOREGROUND,
            scene_index=scene,
            pixels=pixels,
            generation_seed=element_seed,
            character_id=character_id,
        )
        report.elements.append(element)
        storage.add(
            ReferenceRecord(
                character_id=character_id,
                image=pixels,
                tokens=encoder.encode_image(pixels, d_model),
                scene_index=scene,
            )
        )
    return report

"""Default agent instructions.

These texts are project-authored defaults, not reproductions of any
external prompt set; swap them per deployment via InstructionSet.
"""

from __future__ import annotations

from .types import InstructionSet

DEFAULT_STORY_INSTRUCTIONS = InstructionSet(
    entries={
        "scene_extraction": (
            "Split the story into the requested number of scenes following a "
            "three-act arc. For each scene return a one-sentence summary and "
            "the character span of the passage it covers. Reply with "
            '{"scenes": [{"summary": str, "source_span": [start, end]}]}.'
        ),
        "character_extraction": (
            "List every character that acts in the story. For each, fill all "
            "requested attribute keys; when attire is never stated, infer a "
            "plausible outfit from context and set attire_stated to false. "
            'Reply with {"characters": [{"name": str, "attributes": {...}, '
            '"attire_stated": bool}]}.'
        ),
        "prompt_generation": (
            "Write one background description for the scene, free of any "
            "character, and one short action phrase per listed character. "
            'Reply with {"bg": str, "actions": {character_id: str}}.'
        ),
        "reflection": (
            "Compare the rendered prompt with the story segment it came from "
            "and list concrete deviations, marking any that change the story "
            'as blocking. Reply with {"deviation_notes": [{"note": str, '
            '"blocking": bool}]}.'
        ),
    }
)

DEFAULT_IMAGE_INSTRUCTIONS = InstructionSet(
    entries={
        "scene_location": (
            "Given the background image, the foreground subject images and "
            "their prompts, place each subject with a normalized bounding "
            "box (x_min, y_min, x_max, y_max) that keeps the composition "
            "readable and unobstructed."
        ),
        "element_generation": (
            "Render each prompt as a standalone element: backgrounds with no "
            "subjects, subjects cropped tight on a neutral backdrop."
        ),
    }
)

__all__ = ["DEFAULT_IMAGE_INSTRUCTIONS", "DEFAULT_STORY_INSTRUCTIONS"]

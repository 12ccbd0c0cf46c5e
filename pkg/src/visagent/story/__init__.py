"""Story module: distill a narrative into scenes, characters, and layered prompts."""

from .agents import (
    allocate_acts,
    apply_feedback,
    compose_global_prompt,
    extract_characters,
    extract_scenes,
    generate_layered_prompts,
    link_character_refs,
    reflect,
    regenerate_character,
    regenerate_scene,
)
from .instructions import DEFAULT_IMAGE_INSTRUCTIONS, DEFAULT_STORY_INSTRUCTIONS
from .pipeline import (
    AutoApproveChannel,
    BlockingFeedbackChannel,
    FeedbackChannel,
    QueueFeedbackChannel,
    run_story_module,
)
from .types import (
    Act,
    CharacterCategorySchema,
    CharacterDescription,
    DistillationConfig,
    EditTarget,
    FeedbackEdit,
    InstructionSet,
    LayeredPrompts,
    ReflectionEntry,
    ReflectionReport,
    SceneDescription,
    Story,
    StoryDistillation,
    Verdict,
    slugify_name,
    validate_characters,
    validate_scenes,
)

__all__ = [
    "Act",
    "AutoApproveChannel",
    "BlockingFeedbackChannel",
    "CharacterCategorySchema",
    "CharacterDescription",
    "DEFAULT_IMAGE_INSTRUCTIONS",
    "DEFAULT_STORY_INSTRUCTIONS",
    "DistillationConfig",
    "EditTarget",
    "FeedbackChannel",
    "FeedbackEdit",
    "InstructionSet",
    "LayeredPrompts",
    "QueueFeedbackChannel",
    "ReflectionEntry",
    "ReflectionReport",
    "SceneDescription",
    "Story",
    "StoryDistillation",
    "Verdict",
    "allocate_acts",
    "apply_feedback",
    "compose_global_prompt",
    "extract_characters",
    "extract_scenes",
    "generate_layered_prompts",
    "link_character_refs",
    "reflect",
    "regenerate_character",
    "regenerate_scene",
    "run_story_module",
    "slugify_name",
    "validate_characters",
    "validate_scenes",
]

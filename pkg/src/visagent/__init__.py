"""visagent: narrative-preserving story visualization pipeline.

A story module distills plain text into layered background/foreground
prompts; an image module generates elements, places subjects, stitches a
guidance image, and renders each scene through a semantic-aware
cross-attention denoiser. Every external model sits behind a pluggable
backend with deterministic mocks, so the whole pipeline runs hermetically.
"""

from . import backends, evaluation, image, orchestrator, saca, story
from .config import RunConfig
from .errors import VisAgentError

__version__ = "0.1.0"

__all__ = [
    "RunConfig",
    "VisAgentError",
    "backends",
    "evaluation",
    "image",
    "orchestrator",
    "saca",
    "story",
    "__version__",
]

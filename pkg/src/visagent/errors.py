"""Exception hierarchy shared by all visagent modules."""


class VisAgentError(Exception):
    """Base class for all errors raised by this package."""


class BackendError(VisAgentError):
    """A model backend call failed (missing fixture, transport failure, refusal)."""


class SchemaError(VisAgentError):
    """A backend reply could not be parsed into the structure the role requires."""


class UnknownTarget(VisAgentError):
    """A feedback edit referenced a scene or character id that does not exist."""


class InvariantViolation(VisAgentError):
    """A patch or constructed value would break a type invariant."""


class MissingCharacter(VisAgentError):
    """A scene references a character id absent from the registry."""


class FeedbackTimeout(VisAgentError):
    """An approval gate's configured wait expired without a decision."""


class LayoutInvalid(VisAgentError):
    """A layout proposal failed validation after bounded re-asking."""


class MaskEmpty(VisAgentError):
    """A segmentation backend returned an all-zero subject mask."""


class ConfigError(VisAgentError):
    """A run or renderer configuration is internally inconsistent."""


class DegenerateRegion(VisAgentError):
    """A bounding box rasterized to zero latent cells at the given resolution."""


class EmptyTokens(VisAgentError):
    """A token sequence required by an attention branch has zero length."""


class DimensionMismatch(VisAgentError):
    """Tensor dimensions disagree between latent grid, masks, or token bundles."""


class StepOutOfRange(VisAgentError):
    """A denoising step index lies outside the blend schedule's range."""


class MissingBundle(VisAgentError):
    """A rasterized mask region has no matching token bundle."""


class EmptyInput(VisAgentError):
    """A metric received an empty list of pairs."""


class InsufficientCrops(VisAgentError):
    """A character has fewer than two crops, so pairwise similarity is undefined."""


class DegenerateCovariance(VisAgentError):
    """Covariance square root produced negative eigenvalues beyond tolerance."""


class ParseError(VisAgentError):
    """A benchmark or state file is not parseable at all."""


class GateClosed(VisAgentError):
    """An approval event targeted a gate that is not open."""


class UnknownRun(VisAgentError):
    """A run id does not exist in the store."""


class StoreCorrupt(VisAgentError):
    """A persisted run document failed its integrity digest check."""

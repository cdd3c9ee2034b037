"""Exception types shared across the pipeline."""


class PipelineError(Exception):
    """Base class for errors raised by pipeline stages."""


class DegenerateImage(PipelineError):
    """Image has no usable foreground/background split (e.g. constant intensity)."""


class ManifestError(PipelineError):
    """Dataset manifest fails validation."""


class LayoutMismatch(PipelineError):
    """Feature layout of an artifact does not match the expected layout."""


class TrainingError(PipelineError):
    """Classifier training preconditions violated."""

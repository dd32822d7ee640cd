"""Shared exception types."""


class IsarffError(Exception):
    """Base class for isarff-specific errors."""


class ConfigError(IsarffError):
    """Invalid, unknown, or out-of-range configuration input."""


class SegmentationError(IsarffError):
    """Target/background segmentation produced no usable mask."""


class AmbiguousAxisError(IsarffError):
    """Mask second moments are isotropic; no principal axis exists."""


class DegenerateTransformError(IsarffError):
    """Affine parameters compose to a singular matrix."""


class InsufficientDataError(IsarffError):
    """Not enough points or frames for the requested estimate."""


class StageError(IsarffError):
    """A pipeline stage failed; carries the stage name and frame index."""

    def __init__(self, stage, message, frame_index=None):
        self.stage = stage
        self.frame_index = frame_index
        where = stage if frame_index is None else f"{stage}[frame {frame_index}]"
        super().__init__(f"{where}: {message}")

"""Error types shared across the pipeline.

Every error raised on a declared contract boundary derives from
:class:`NextChannelError` so callers (and the CLI) can distinguish pipeline
failures from programming bugs.
"""


class NextChannelError(Exception):
    """Base class for all pipeline errors."""


class ConfigurationError(NextChannelError):
    """A config object or parameter violates its invariants."""


class DataError(NextChannelError):
    """Input data is unusable (non-finite values, bad ranges)."""


class ShapeError(DataError):
    """Array has the wrong shape or channel count."""


class WeightFileError(NextChannelError):
    """Base class for weight/tensor container problems."""


class CorruptFileError(WeightFileError):
    """File is truncated, has a bad magic, or fails to parse."""


class FormatVersionError(WeightFileError):
    """File uses an unsupported container format version."""


class ConfigMismatchError(WeightFileError):
    """Stored model config is incompatible with what the caller expects."""


class PanelMismatchError(DataError):
    """Marker panels of two artifacts disagree."""


class GenerationError(NextChannelError):
    """Synthetic data generation could not satisfy the requested spec."""


class TrainingDivergedError(NextChannelError):
    """Training produced a non-finite loss or gradients."""


class MissingArtifactError(NextChannelError):
    """A command requires an artifact that has not been produced yet."""


class StalenessError(NextChannelError):
    """Artifacts were produced under a different run configuration."""

"""Exception types shared across the toolkit."""


class VoxdisError(Exception):
    """Base class for all toolkit errors."""


class FormatError(VoxdisError):
    """Malformed or unsupported file content."""


class EmptyInputError(VoxdisError):
    """Input signal too short or empty for the requested operation."""


class ShapeError(VoxdisError):
    """Tensor shapes incompatible for the requested operation."""


class ConfigError(VoxdisError):
    """Invalid configuration value or inconsistent configuration pair."""


class LabelError(VoxdisError):
    """Class or speaker label outside the expected range."""


class SplitError(VoxdisError):
    """Dataset cannot be split as requested."""


class UndefinedFeatureError(VoxdisError):
    """A feature has no defined value on this input (e.g. no voiced frames)."""


class UndefinedMetricError(VoxdisError):
    """A metric has no defined value on this input (e.g. single-class AUC)."""


class MetricError(VoxdisError):
    """Metric computation failed numerically."""


class EstimationError(VoxdisError):
    """Not enough data to estimate a statistical quantity."""


class TrainingError(VoxdisError):
    """Training aborted (non-finite loss or invalid optimization state)."""

"""Exceptions raised across av_identity_guard."""


class ValidationError(Exception):
	"""Base class for every user-facing failure of the pipeline."""


class DimensionError(ValidationError, ValueError):
	"""Tensor shapes do not line up."""


class ConfigError(ValidationError, ValueError):
	"""Invalid settings value or combination of values."""


class DatasetError(ValidationError):
	"""Dataset files or their contents break a dataset invariant."""


class NonFiniteError(ValidationError, FloatingPointError):
	"""NaN or Inf found in a tensor, a gradient or a loss."""


class CheckpointError(ValidationError):
	"""Malformed or incompatible tensor container."""

"""Eval Settings controller."""

from av_identity_guard.exceptions import ConfigError
from av_identity_guard.settings import Settings


class EvalSettings(Settings):
	"""Windowing protocol and report options."""

	group = "eval"

	def validate(self):
		if self.window_s <= 0:
			raise ConfigError("window_s must be positive")
		if not 0.0 <= self.overlap_frac < 1.0:
			raise ConfigError(f"overlap_frac must lie in [0, 1), got {self.overlap_frac}")
		if self.batch_size < 1:
			raise ConfigError("batch_size must be positive")

"""Train Settings controller."""

from av_identity_guard.exceptions import ConfigError
from av_identity_guard.settings import Settings


class TrainSettings(Settings):
	"""Optimization loop, schedule and loss weights."""

	group = "train"

	def validate(self):
		"""Validate settings before training."""
		if self.steps < 1 or self.batch_size < 1:
			raise ConfigError("steps and batch_size must be positive")
		if not 0 <= self.warmup_steps < self.steps:
			raise ConfigError(f"warmup_steps must lie in [0, steps), got {self.warmup_steps}")
		if not 0 < self.min_lr <= self.base_lr:
			raise ConfigError("Need 0 < min_lr <= base_lr")
		if self.w_rf <= 0 or self.w_id < 0:
			raise ConfigError(f"Need w_rf > 0 and w_id >= 0, got {self.w_rf}/{self.w_id}")
		if self.log_every < 1 or self.eval_every < 0 or self.val_pairs < 1:
			raise ConfigError("log_every and val_pairs must be positive, eval_every non-negative")

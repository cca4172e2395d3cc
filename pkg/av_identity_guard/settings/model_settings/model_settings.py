"""Model Settings controller."""

from av_identity_guard.exceptions import ConfigError
from av_identity_guard.settings import Settings


class ModelSettings(Settings):
	"""Architecture and ablation switches of the detector."""

	group = "model"

	def validate(self):
		"""Validate settings before the model is built."""
		for fieldname in ("d_model", "d_raw", "n_seg", "t_v", "t_a", "num_heads", "ffn_mult"):
			if getattr(self, fieldname) < 1:
				raise ConfigError(f"{fieldname} must be positive")
		if self.n_queries < 1:
			raise ConfigError("n_queries must be positive")
		for fieldname in ("idb_layers", "match_layers", "av_layers"):
			if getattr(self, fieldname) < 0:
				raise ConfigError(f"{fieldname} must be non-negative")
		if self.d_model % self.num_heads:
			raise ConfigError(f"d_model {self.d_model} is not divisible by num_heads {self.num_heads}")
		if self.d_model < 2:
			raise ConfigError("d_model must be at least 2 for the identity head")
		if not 0.0 <= self.dropout < 1.0:
			raise ConfigError(f"dropout must lie in [0, 1), got {self.dropout}")

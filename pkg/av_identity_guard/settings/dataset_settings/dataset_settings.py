"""Dataset Settings controller."""

from av_identity_guard.exceptions import ConfigError
from av_identity_guard.settings import Settings
from av_identity_guard.synthworld.types import Manipulation, Split

MIX_TOLERANCE = 1e-6


class DatasetSettings(Settings):
	"""Settings for synthetic identity world generation."""

	group = "dataset"

	def validate(self):
		"""Validate settings before generation."""
		if self.n_speakers < 2:
			raise ConfigError("At least two speakers are needed to build swaps")
		if not 0 <= self.held_out_speakers < self.n_speakers:
			raise ConfigError(f"held_out_speakers must lie in [0, {self.n_speakers}), got {self.held_out_speakers}")
		if self.eval_references < 1:
			raise ConfigError("Every speaker needs at least one evaluation reference")

		self._validate_mix()
		self._validate_geometry()

		if self.noise_std < 0 or self.identity_scale < 0 or self.content_scale < 0:
			raise ConfigError("World amplitudes must be non-negative")
		if not 0 <= self.identity_drift_deg <= 180:
			raise ConfigError(f"identity_drift_deg must lie in [0, 180], got {self.identity_drift_deg}")
		if self.artifact_period < 1:
			raise ConfigError("artifact_period must be positive")
		if not self.desync_shifts or 0 in self.desync_shifts:
			raise ConfigError(f"desync_shifts must be non-empty and non-zero, got {self.desync_shifts}")

	def _validate_mix(self):
		mix = self.mixture()
		total = sum(mix.values())
		if abs(total - 1.0) > MIX_TOLERANCE:
			raise ConfigError(f"manipulation_mix must sum to 1, got {total}")
		if any(p < 0 for p in mix.values()):
			raise ConfigError("manipulation_mix has a negative probability")

		held_out = self.held_out_set()
		if Manipulation.REAL in held_out:
			raise ConfigError("REAL cannot be a held-out manipulation")

		swaps = (Manipulation.VISUAL_SWAP, Manipulation.AUDIO_SWAP, Manipulation.BOTH_SWAP)
		if any(mix.get(m, 0.0) > 0 for m in swaps) and self.n_speakers - self.held_out_speakers < 2:
			raise ConfigError("Swaps need at least two seen speakers")
		if self.unseen_real_every < 0:
			raise ConfigError(f"unseen_real_every must be non-negative, got {self.unseen_real_every}")

		splits = self.split_mixture()
		total = sum(splits.values())
		if abs(total - 1.0) > MIX_TOLERANCE:
			raise ConfigError(f"split_fractions must sum to 1, got {total}")

	def _validate_geometry(self):
		if self.n_seg < 2:
			raise ConfigError("A window needs at least two segments")
		if self.min_segments < self.n_seg:
			raise ConfigError(f"min_segments ({self.min_segments}) is shorter than one window ({self.n_seg})")
		if self.max_segments < self.min_segments:
			raise ConfigError("max_segments is smaller than min_segments")
		if self.t_v < 1 or self.t_a < 1:
			raise ConfigError("Token counts per segment must be positive")

	def mixture(self):
		"""manipulation_mix as {Manipulation: probability}."""
		try:
			return {Manipulation[name]: float(p) for name, p in self.manipulation_mix.items()}
		except (KeyError, AttributeError) as e:
			raise ConfigError(f"Invalid manipulation_mix: {self.manipulation_mix}") from e

	def held_out_set(self):
		try:
			return frozenset(Manipulation[name] for name in self.held_out_manipulations)
		except (KeyError, TypeError) as e:
			raise ConfigError(f"Invalid held_out_manipulations: {self.held_out_manipulations}") from e

	def split_mixture(self):
		"""split_fractions as {Split: probability} over TRAIN/VAL/TEST_IN."""
		allowed = {Split.TRAIN, Split.VAL, Split.TEST_IN}
		try:
			splits = {Split[name]: float(p) for name, p in self.split_fractions.items()}
		except (KeyError, AttributeError) as e:
			raise ConfigError(f"Invalid split_fractions: {self.split_fractions}") from e
		if not set(splits) <= allowed:
			raise ConfigError("split_fractions may only name TRAIN, VAL and TEST_IN")
		return splits

"""Joint deepfake-classification and identity-matching objective."""

from dataclasses import dataclass

import numpy as np

from av_identity_guard.exceptions import ConfigError, ValidationError
from av_identity_guard.numcore import cross_entropy


@dataclass(frozen=True)
class LossWeights:
	w_rf: float = 1.0
	w_id: float = 1.0

	def __post_init__(self):
		if self.w_rf < 0 or self.w_id < 0:
			raise ConfigError(f"Loss weights must be non-negative, got w_rf={self.w_rf}, w_id={self.w_id}")
		if self.w_rf == 0:
			raise ConfigError("w_rf must be positive")

	@classmethod
	def from_settings(cls, settings):
		return cls(w_rf=settings.w_rf, w_id=settings.w_id)


def _binary_labels(labels, name):
	labels = np.asarray(labels, dtype=np.int64).reshape(-1)
	if labels.size and not np.isin(labels, (0, 1)).all():
		raise ValidationError(f"{name} must be binary, got {labels.tolist()}")
	return labels


def _batched(logits):
	return logits.reshape(1, -1) if logits.ndim == 1 else logits


def loss_terms(rf_logits, y_fake, id_logits, y_id_match):
	"""(L_RF, L_ID) as scalar Tensors."""
	loss_rf = cross_entropy(_batched(rf_logits), _binary_labels(y_fake, "y_fake"))
	loss_id = cross_entropy(_batched(id_logits), _binary_labels(y_id_match, "y_id_match"))
	return loss_rf, loss_id


def total_loss(rf_logits, y_fake, id_logits, y_id_match, weights=None):
	"""w_rf * CE(rf_logits, y_fake) + w_id * CE(id_logits, y_id_match).

	With w_id = 0 the identity term is left out of the graph entirely.
	"""
	return combine(*loss_terms(rf_logits, y_fake, id_logits, y_id_match), weights or LossWeights())


def combine(loss_rf, loss_id, weights):
	if weights.w_id == 0:
		return loss_rf * weights.w_rf
	return loss_rf * weights.w_rf + loss_id * weights.w_id

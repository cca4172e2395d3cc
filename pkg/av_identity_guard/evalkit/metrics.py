"""Threshold-free ranking metrics and the evaluation report."""

from dataclasses import asdict, dataclass, field

import numpy as np

from av_identity_guard.exceptions import DimensionError, ValidationError


def _prepare(scores, labels):
	scores = np.asarray(scores, dtype=np.float64).reshape(-1)
	labels = np.asarray(labels, dtype=np.int64).reshape(-1)
	if scores.shape != labels.shape:
		raise DimensionError(f"Got {scores.size} scores for {labels.size} labels")
	if labels.size and not np.isin(labels, (0, 1)).all():
		raise ValidationError("Labels must be binary")
	return scores, labels


def _tie_groups(scores, labels):
	"""Positives and negatives per distinct score, in descending score order."""
	values, inverse = np.unique(-scores, return_inverse=True)
	positives = np.bincount(inverse, weights=labels, minlength=len(values)).astype(np.int64)
	totals = np.bincount(inverse, minlength=len(values)).astype(np.int64)
	return positives, totals - positives


def auc(scores, labels):
	"""Area under the ROC curve with half credit for tied positive/negative pairs.

	Computed from the Mann-Whitney count over tie groups, so the result is the
	exact pairwise probability P(s_pos > s_neg) + 0.5 * P(s_pos = s_neg).
	"""
	scores, labels = _prepare(scores, labels)
	n_pos = int(labels.sum())
	n_neg = labels.size - n_pos
	if n_pos == 0 or n_neg == 0:
		raise ValidationError(f"AUC needs both classes, got {n_pos} positives and {n_neg} negatives")

	positives, negatives = _tie_groups(scores, labels)
	# Groups are descending, so negatives strictly below a group are those after it.
	below = n_neg - np.cumsum(negatives)
	doubled = int((2 * positives * below + positives * negatives).sum())
	return doubled / (2.0 * n_pos * n_neg)


def average_precision(scores, labels):
	"""Sum over descending tie groups of (recall gain) * (precision at that group)."""
	scores, labels = _prepare(scores, labels)
	n_pos = int(labels.sum())
	if n_pos == 0:
		raise ValidationError("Average precision needs at least one positive")

	positives, negatives = _tie_groups(scores, labels)
	ap, tp, fp = 0.0, 0, 0
	for pos, neg in zip(positives.tolist(), negatives.tolist()):
		tp += pos
		fp += neg
		if pos:
			ap += (pos / n_pos) * (tp / (tp + fp))
	return ap


def accuracy(predictions, labels):
	predictions, labels = _prepare(predictions, labels)
	if labels.size == 0:
		raise ValidationError("Accuracy of an empty set")
	return float((predictions.astype(np.int64) == labels).mean())


@dataclass
class ClipScore:
	"""Per-target result of the window protocol."""

	clip_id: int
	manipulation: str
	y_fake: int
	score: float
	prediction: int
	n_windows: int


@dataclass
class MetricsReport:
	acc: float
	auc: float
	ap: float
	n_real: int
	n_fake: int
	per_manipulation: dict = field(default_factory=dict)
	split: str = None

	def __post_init__(self):
		values = [self.acc, self.auc, self.ap]
		values += [v for entry in self.per_manipulation.values() for k, v in entry.items() if k != "n"]
		if any(not 0.0 <= v <= 1.0 for v in values):
			raise ValidationError(f"Metric outside [0, 1]: {values}")

	def to_dict(self):
		return asdict(self)


def build_report(rows, split=None):
	"""Overall and per-manipulation metrics from per-clip scores.

	Each fake manipulation is scored against all real targets of the split.
	"""
	scores = np.array([r.score for r in rows], dtype=np.float64)
	labels = np.array([r.y_fake for r in rows], dtype=np.int64)
	predictions = np.array([r.prediction for r in rows], dtype=np.int64)

	real = labels == 0
	per_manipulation = {}
	if real.any():
		for tag in sorted({r.manipulation for r in rows if r.y_fake}):
			chosen = real | np.array([r.manipulation == tag for r in rows])
			per_manipulation[tag] = {
				"auc": auc(scores[chosen], labels[chosen]),
				"ap": average_precision(scores[chosen], labels[chosen]),
				"n": int((~real & chosen).sum()),
			}

	return MetricsReport(
		acc=accuracy(predictions, labels),
		auc=auc(scores, labels),
		ap=average_precision(scores, labels),
		n_real=int(real.sum()),
		n_fake=int((~real).sum()),
		per_manipulation=per_manipulation,
		split=split,
	)

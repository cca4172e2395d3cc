"""Sliding-window inference protocol: window planning and probability averaging."""

from dataclasses import dataclass, field

import numpy as np

from av_identity_guard.exceptions import DatasetError, DimensionError, ValidationError

TIME_TOLERANCE = 1e-9


@dataclass(frozen=True)
class WindowPlan:
	window_s: float
	overlap_frac: float
	starts: list = field(default_factory=list)

	@property
	def stride_s(self):
		return self.window_s * (1.0 - self.overlap_frac)

	def __len__(self):
		return len(self.starts)


def plan_windows(duration_s, window_s=2.88, overlap_frac=0.05):
	"""Window starts covering a clip with overlapping fixed-length windows.

	Windows advance by window_s * (1 - overlap_frac). When the last regular
	window stops short of the clip end, one end-aligned window is appended.

	Args:
		duration_s: Clip duration in seconds
		window_s: Window length in seconds
		overlap_frac: Fraction of a window shared with the next one

	Returns:
		WindowPlan
	"""
	if not 0.0 <= overlap_frac < 1.0:
		raise ValidationError(f"overlap_frac must lie in [0, 1), got {overlap_frac}")
	if duration_s < window_s - TIME_TOLERANCE:
		raise DatasetError(
			f"Clip of {duration_s:.3f}s is shorter than the {window_s}s window; pad or reject the clip"
		)

	stride = window_s * (1.0 - overlap_frac)
	starts = []
	k = 0
	while k * stride + window_s <= duration_s + TIME_TOLERANCE:
		starts.append(k * stride)
		k += 1

	tail = duration_s - window_s
	if starts[-1] + window_s < duration_s - TIME_TOLERANCE and tail - starts[-1] > TIME_TOLERANCE:
		starts.append(tail)
	return WindowPlan(window_s=window_s, overlap_frac=overlap_frac, starts=starts)


def aggregate(window_probs):
	"""Average per-window class probabilities and take the argmax.

	Args:
		window_probs: Sequence of [2] probability vectors (arrays or Tensors)

	Returns:
		(video_prob [2] array, prediction) where ties go to real (0)
	"""
	if len(window_probs) == 0:
		raise ValidationError("Cannot aggregate an empty list of window probabilities")
	probs = np.stack([np.asarray(getattr(p, "data", p), dtype=np.float64).reshape(-1) for p in window_probs])
	if probs.shape[1] != 2:
		raise DimensionError(f"Expected 2-class probabilities, got shape {probs.shape}")

	video_prob = probs.mean(axis=0)
	prediction = int(video_prob[1] > video_prob[0])
	return video_prob, prediction

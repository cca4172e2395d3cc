"""Scorers: anything that maps a target/reference pair to per-window class probabilities.

Every scorer implements `window_probs(pair, first_segments)` and returns an
array [n_windows, 2] of (real, fake) probabilities, one row per window.
"""

import logging
from pathlib import Path

import numpy as np

from av_identity_guard.avformer.detector import build_model
from av_identity_guard.common.utils import read_json
from av_identity_guard.exceptions import CheckpointError
from av_identity_guard.featpipe import stack_windows
from av_identity_guard.numcore import checkpoint
from av_identity_guard.settings.model_settings.model_settings import ModelSettings

logger = logging.getLogger(__name__)

CHECKPOINT = "model.bin"
RUN_FILE = "run.json"


class DetectorScorer:
	"""Runs a trained DetectorModel over target windows.

	The reference clip contributes its first window to every target window.
	"""

	def __init__(self, model, batch_size=64):
		self.model = model.eval()
		self.geometry = model.geometry
		self.batch_size = batch_size

	def window_probs(self, pair, first_segments):
		ref_v, ref_a = self.geometry.crop(pair.reference_visual, pair.reference_audio, 0)
		crops = [self.geometry.crop(pair.target_visual, pair.target_audio, s) for s in first_segments]

		probs = []
		for i in range(0, len(crops), self.batch_size):
			chunk = crops[i : i + self.batch_size]
			n = len(chunk)
			out = self.model(
				stack_windows([c[0] for c in chunk]),
				stack_windows([c[1] for c in chunk]),
				np.broadcast_to(ref_v, (n, *ref_v.shape)),
				np.broadcast_to(ref_a, (n, *ref_a.shape)),
			)
			probs.append(out.fake_probability())
		return np.concatenate(probs, axis=0)


class OracleScorer:
	"""Emits the true label as the fake probability."""

	def window_probs(self, pair, first_segments):
		y = float(pair.y_fake)
		return np.tile([1.0 - y, y], (len(first_segments), 1))


class ConstantScorer:
	def __init__(self, p_fake=0.5):
		self.p_fake = p_fake

	def window_probs(self, pair, first_segments):
		return np.tile([1.0 - self.p_fake, self.p_fake], (len(first_segments), 1))


class RandomScorer:
	"""Uniform random fake probability per window, seeded."""

	def __init__(self, seed=0):
		self.rng = np.random.default_rng([seed, 5])

	def window_probs(self, pair, first_segments):
		p = self.rng.random(len(first_segments))
		return np.stack([1.0 - p, p], axis=1)


def load_detector(run_dir, batch_size=64):
	"""Rebuild a DetectorModel from a training run directory.

	Args:
		run_dir: Directory holding model.bin and run.json, or the model.bin path itself
		batch_size: Windows per forward pass

	Returns:
		DetectorScorer
	"""
	path = Path(run_dir)
	run_dir = path.parent if path.is_file() else path
	if not (run_dir / CHECKPOINT).exists() or not (run_dir / RUN_FILE).exists():
		raise CheckpointError(f"{run_dir} does not hold {CHECKPOINT} and {RUN_FILE}")

	run = read_json(run_dir / RUN_FILE)
	settings = ModelSettings(run["config"]["model"])
	model = build_model(settings, seed=run.get("seed", 0))
	model.load_state_dict(checkpoint.load(run_dir / CHECKPOINT))
	logger.info("Loaded %d parameters from %s", model.num_parameters(), run_dir / CHECKPOINT)
	return DetectorScorer(model, batch_size=batch_size)


def detector_scorer(run_dir=None, batch_size=64, seed=0):
	if run_dir is None:
		raise CheckpointError("The detector scorer needs a checkpoint directory")
	return load_detector(run_dir, batch_size=batch_size)


def oracle_scorer(run_dir=None, batch_size=64, seed=0):
	return OracleScorer()


def constant_scorer(run_dir=None, batch_size=64, seed=0):
	return ConstantScorer()


def random_scorer(run_dir=None, batch_size=64, seed=0):
	return RandomScorer(seed)

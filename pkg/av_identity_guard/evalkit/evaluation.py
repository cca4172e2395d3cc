"""Evaluation of a scorer on one dataset split."""

import csv
import logging
from pathlib import Path

from tqdm import tqdm

from av_identity_guard.common.utils import write_json
from av_identity_guard.evalkit.metrics import ClipScore, build_report
from av_identity_guard.evalkit.windows import aggregate, plan_windows
from av_identity_guard.exceptions import ConfigError
from av_identity_guard.synthworld.sampler import pair_sampler
from av_identity_guard.synthworld.types import Split

logger = logging.getLogger(__name__)

REPORT = "report.json"
SCORES = "scores.csv"
CSV_FIELDS = ("clip_id", "manipulation", "y_fake", "score", "prediction", "n_windows")


def score_pair(scorer, pair, geometry, window_s, overlap_frac):
	"""Window the target clip, score every window and average.

	Returns:
		ClipScore
	"""
	n_segments = pair.target.duration_segments
	plan = plan_windows(geometry.clip_duration(n_segments), window_s, overlap_frac)
	first_segments = [geometry.segment_index(start, n_segments) for start in plan.starts]
	video_prob, prediction = aggregate(scorer.window_probs(pair, first_segments))
	return ClipScore(
		clip_id=pair.target.clip_id,
		manipulation=pair.manipulation.value,
		y_fake=pair.y_fake,
		score=float(video_prob[1]),
		prediction=prediction,
		n_windows=len(plan),
	)


def evaluate(scorer, dataset, split, settings, limit=None, progress=False):
	"""Score every predefined pair of a split and compute the metrics.

	Args:
		scorer: Object with window_probs(pair, first_segments)
		dataset: Dataset
		split: Split or its name
		settings: EvalSettings
		limit: Only score the first `limit` pairs
		progress: Show a progress bar

	Returns:
		(MetricsReport, list of ClipScore)
	"""
	split = Split.parse(split)
	geometry = dataset.geometry
	if abs(settings.window_s - geometry.window_s) > 1e-9:
		raise ConfigError(f"Evaluation window {settings.window_s}s differs from the model window {geometry.window_s}s")

	pairs = list(pair_sampler(dataset, "eval", split=split))
	if limit is not None:
		pairs = pairs[:limit]

	rows = [
		score_pair(scorer, pair, geometry, settings.window_s, settings.overlap_frac)
		for pair in tqdm(pairs, desc=f"Evaluating {split.value}", disable=not progress)
	]
	report = build_report(rows, split=split.value)
	logger.info("%s: acc=%.4f auc=%.4f ap=%.4f over %d clips", split.value, report.acc, report.auc, report.ap, len(rows))
	return report, rows


def write_report(report, rows, out_dir, write_csv=True):
	"""Write report.json and, optionally, the per-clip scores.csv."""
	out = Path(out_dir)
	write_json(out / REPORT, report.to_dict())
	if write_csv:
		with open(out / SCORES, "w", encoding="utf-8", newline="") as f:
			writer = csv.DictWriter(f, fieldnames=CSV_FIELDS, lineterminator="\n")
			writer.writeheader()
			for row in rows:
				writer.writerow({name: getattr(row, name) for name in CSV_FIELDS})
	return out / REPORT

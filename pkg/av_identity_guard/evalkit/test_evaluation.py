import csv
import json

import numpy as np
import pytest

from av_identity_guard.evalkit import ClipScore, aggregate, build_report, evaluate, write_report
from av_identity_guard.evalkit.scorers import ConstantScorer, OracleScorer, RandomScorer
from av_identity_guard.exceptions import ConfigError, DatasetError
from av_identity_guard.settings.eval_settings.eval_settings import EvalSettings
from av_identity_guard.synthworld.types import Split


def _mixed_split(dataset):
	for split in (Split.TEST_UNSEEN, Split.TEST_IN, Split.VAL):
		if {t.y_fake for t in dataset.targets(split)} == {0, 1}:
			return split
	pytest.skip("No evaluation split holds both classes")


def test_oracle_scores_perfectly(tiny_dataset, eval_settings):
	report, rows = evaluate(OracleScorer(), tiny_dataset, _mixed_split(tiny_dataset), eval_settings)
	assert report.acc == report.auc == report.ap == 1.0
	assert len(rows) == report.n_real + report.n_fake
	assert all(entry["auc"] == 1.0 for entry in report.per_manipulation.values())


def test_constant_scorer_is_chance(tiny_dataset, eval_settings):
	split = _mixed_split(tiny_dataset)
	report, rows = evaluate(ConstantScorer(), tiny_dataset, split, eval_settings)
	assert report.auc == 0.5
	assert all(row.prediction == 0 for row in rows)
	assert report.acc == pytest.approx(report.n_real / len(rows))


def test_rows_follow_manifest_order(tiny_dataset, eval_settings):
	split = _mixed_split(tiny_dataset)
	_, rows = evaluate(OracleScorer(), tiny_dataset, split, eval_settings)
	assert [row.clip_id for row in rows] == [t.clip_id for t in tiny_dataset.targets(split)]
	for row in rows:
		assert row.n_windows >= 1


def test_long_clips_get_several_windows(tiny_dataset, eval_settings):
	_, rows = evaluate(OracleScorer(), tiny_dataset, Split.TEST_UNSEEN, eval_settings)
	by_id = {row.clip_id: row for row in rows}
	for target in tiny_dataset.targets(Split.TEST_UNSEEN):
		expected = 1 if target.spec.duration_segments == 8 else 2
		assert by_id[target.clip_id].n_windows == expected


def test_limit(tiny_dataset, eval_settings):
	split = _mixed_split(tiny_dataset)
	_, rows = evaluate(OracleScorer(), tiny_dataset, split, eval_settings, limit=1000)
	assert len(rows) == len(tiny_dataset.targets(split))


def test_random_scorer_is_near_chance():
	scorer = RandomScorer(seed=0)
	rows = []
	for i in range(1000):
		video_prob, prediction = aggregate(scorer.window_probs(None, [0]))
		rows.append(ClipScore(i, "REAL" if i % 2 else "VISUAL_SWAP", int(i % 2 == 0), float(video_prob[1]), prediction, 1))
	report = build_report(rows)
	assert 0.45 <= report.auc <= 0.55


def test_window_mismatch_is_rejected(tiny_dataset):
	with pytest.raises(ConfigError):
		evaluate(OracleScorer(), tiny_dataset, Split.TEST_UNSEEN, EvalSettings({"window_s": 3.2}))


def test_missing_split(tiny_dataset, eval_settings):
	with pytest.raises(DatasetError):
		evaluate(OracleScorer(), tiny_dataset, Split.TRAIN, eval_settings)
	with pytest.raises(DatasetError):
		evaluate(OracleScorer(), tiny_dataset, "holdout", eval_settings)


def test_write_report(tiny_dataset, eval_settings, tmp_path):
	split = _mixed_split(tiny_dataset)
	report, rows = evaluate(OracleScorer(), tiny_dataset, split, eval_settings)
	path = write_report(report, rows, tmp_path)

	data = json.loads(path.read_text())
	assert data["auc"] == 1.0 and data["split"] == split.value
	with open(tmp_path / "scores.csv", newline="") as f:
		table = list(csv.DictReader(f))
	assert len(table) == len(rows)
	assert set(table[0]) == {"clip_id", "manipulation", "y_fake", "score", "prediction", "n_windows"}
	assert [float(r["score"]) for r in table] == [float(r.y_fake) for r in rows]


def test_write_report_without_csv(tiny_dataset, eval_settings, tmp_path):
	report, rows = evaluate(OracleScorer(), tiny_dataset, _mixed_split(tiny_dataset), eval_settings)
	write_report(report, rows, tmp_path, write_csv=False)
	assert (tmp_path / "report.json").exists()
	assert not (tmp_path / "scores.csv").exists()


def test_random_scorer_is_seeded():
	first = RandomScorer(seed=3).window_probs(None, [0, 1, 2])
	second = RandomScorer(seed=3).window_probs(None, [0, 1, 2])
	np.testing.assert_array_equal(first, second)
	np.testing.assert_allclose(first.sum(axis=1), 1.0)

import numpy as np
import pytest

from av_identity_guard.evalkit import ClipScore, MetricsReport, accuracy, auc, average_precision, build_report
from av_identity_guard.exceptions import ValidationError


def _pairwise_auc(scores, labels):
	pos = [s for s, y in zip(scores, labels) if y == 1]
	neg = [s for s, y in zip(scores, labels) if y == 0]
	doubled = sum(2 if p > n else 1 if p == n else 0 for p in pos for n in neg)
	return doubled / (2.0 * len(pos) * len(neg))


def _threshold_ap(scores, labels):
	scores, labels = np.asarray(scores), np.asarray(labels)
	n_pos = labels.sum()
	ap, previous_recall = 0.0, 0.0
	for threshold in sorted(set(scores.tolist()), reverse=True):
		chosen = scores >= threshold
		tp = labels[chosen].sum()
		recall = tp / n_pos
		ap += (recall - previous_recall) * tp / chosen.sum()
		previous_recall = recall
	return ap


# ==========================================================================
# AUC
# ==========================================================================


def test_auc_perfect_ranking():
	assert auc([0.9, 0.8, 0.3, 0.1], [1, 1, 0, 0]) == 1.0


def test_auc_inverted():
	assert auc([0.1, 0.9], [1, 0]) == 0.0


def test_auc_half_credit_for_ties():
	assert auc([0.5, 0.5, 0.2], [1, 0, 0]) == 0.75


def test_auc_all_ties():
	assert auc([0.5] * 6, [1, 0, 1, 0, 0, 1]) == 0.5


def test_auc_matches_pairwise_count_exactly():
	rng = np.random.default_rng(11)
	for _ in range(1000):
		n = int(rng.integers(2, 12))
		labels = rng.integers(0, 2, size=n)
		labels[0], labels[1] = 0, 1
		scores = rng.integers(0, 5, size=n) / 4.0
		assert auc(scores, labels) == _pairwise_auc(scores.tolist(), labels.tolist())


def test_auc_single_class():
	with pytest.raises(ValidationError):
		auc([0.1, 0.2], [1, 1])
	with pytest.raises(ValidationError):
		auc([0.1, 0.2], [0, 0])


# ==========================================================================
# Average precision
# ==========================================================================


def test_ap_perfect_ranking():
	assert average_precision([0.9, 0.8, 0.3, 0.1], [1, 1, 0, 0]) == 1.0


def test_ap_hand_sweep():
	assert average_precision([0.9, 0.8, 0.7], [0, 1, 1]) == pytest.approx(0.58333, abs=1e-5)


def test_ap_single_tie_group_is_prevalence():
	assert average_precision([0.4] * 8, [1, 0, 0, 1, 0, 1, 0, 0]) == pytest.approx(3 / 8)


def test_ap_matches_threshold_sweep():
	rng = np.random.default_rng(12)
	for _ in range(1000):
		n = int(rng.integers(2, 12))
		labels = rng.integers(0, 2, size=n)
		labels[0] = 1
		scores = rng.integers(0, 5, size=n) / 4.0
		assert average_precision(scores, labels) == pytest.approx(_threshold_ap(scores, labels), abs=1e-12)


def test_ap_needs_a_positive():
	with pytest.raises(ValidationError):
		average_precision([0.2, 0.4], [0, 0])


def test_metrics_agree_with_sklearn():
	sk = pytest.importorskip("sklearn.metrics")
	rng = np.random.default_rng(13)
	for _ in range(50):
		labels = rng.integers(0, 2, size=40)
		labels[:2] = [0, 1]
		scores = rng.random(40)
		assert auc(scores, labels) == pytest.approx(sk.roc_auc_score(labels, scores), abs=1e-12)
		assert average_precision(scores, labels) == pytest.approx(sk.average_precision_score(labels, scores), abs=1e-12)


# ==========================================================================
# Accuracy and reports
# ==========================================================================


def test_accuracy():
	assert accuracy([1, 0, 1, 1], [1, 0, 0, 1]) == 0.75
	with pytest.raises(ValidationError):
		accuracy([], [])


def _row(clip_id, manipulation, score):
	y = int(manipulation != "REAL")
	return ClipScore(clip_id, manipulation, y, score, int(score > 0.5), 1)


def test_report_per_manipulation():
	rows = [
		_row(0, "REAL", 0.1),
		_row(1, "REAL", 0.6),
		_row(2, "VISUAL_SWAP", 0.9),
		_row(3, "VISUAL_SWAP", 0.8),
		_row(4, "DESYNC", 0.4),
	]
	report = build_report(rows, split="TEST_UNSEEN")
	assert (report.n_real, report.n_fake) == (2, 3)
	assert report.acc == pytest.approx(3 / 5)
	assert report.per_manipulation["VISUAL_SWAP"] == {"auc": 1.0, "ap": 1.0, "n": 2}
	assert report.per_manipulation["DESYNC"]["auc"] == 0.5
	assert report.per_manipulation["DESYNC"]["n"] == 1
	assert set(report.per_manipulation) == {"VISUAL_SWAP", "DESYNC"}
	assert report.to_dict()["split"] == "TEST_UNSEEN"


def test_report_range_is_checked():
	with pytest.raises(ValidationError):
		MetricsReport(acc=1.2, auc=0.5, ap=0.5, n_real=1, n_fake=1)

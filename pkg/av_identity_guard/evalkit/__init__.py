"""Inference protocol, metrics and evaluation reports."""

from av_identity_guard.evalkit.evaluation import evaluate, score_pair, write_report
from av_identity_guard.evalkit.metrics import (
	ClipScore,
	MetricsReport,
	accuracy,
	auc,
	average_precision,
	build_report,
)
from av_identity_guard.evalkit.windows import WindowPlan, aggregate, plan_windows

"""Training loop: balanced pair sampling, joint loss, Adam with warmup + cosine decay."""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from tqdm import tqdm

from av_identity_guard.avformer.detector import build_model, check_geometry
from av_identity_guard.avformer.losses import LossWeights, combine, loss_terms
from av_identity_guard.common.utils import log_error
from av_identity_guard.evalkit.evaluation import evaluate
from av_identity_guard.evalkit.scorers import CHECKPOINT, DetectorScorer
from av_identity_guard.exceptions import NonFiniteError, ValidationError
from av_identity_guard.featpipe import stack_windows
from av_identity_guard.numcore import Adam, AdamState, checkpoint
from av_identity_guard.synthworld.sampler import pair_sampler
from av_identity_guard.synthworld.types import Split

logger = logging.getLogger(__name__)

TRAIN_LOG = "train_log.jsonl"


@dataclass
class Batch:
	target_visual: np.ndarray
	target_audio: np.ndarray
	reference_visual: np.ndarray
	reference_audio: np.ndarray
	y_fake: np.ndarray
	y_id_match: np.ndarray


@dataclass
class TrainResult:
	model: object
	history: list = field(default_factory=list)
	param_count: int = 0
	checkpoint_path: Path = None


def make_batch(pairs, geometry, rng):
	"""Crop a random window from every target and reference and stack them."""
	tv, ta, rv, ra = [], [], [], []
	for pair in pairs:
		v, a = geometry.random_crop(pair.target_visual, pair.target_audio, rng)
		tv.append(v)
		ta.append(a)
		v, a = geometry.random_crop(pair.reference_visual, pair.reference_audio, rng)
		rv.append(v)
		ra.append(a)
	return Batch(
		target_visual=stack_windows(tv),
		target_audio=stack_windows(ta),
		reference_visual=stack_windows(rv),
		reference_audio=stack_windows(ra),
		y_fake=np.array([p.y_fake for p in pairs], dtype=np.int64),
		y_id_match=np.array([p.y_id_match for p in pairs], dtype=np.int64),
	)


def loss_on_batch(model, batch, weights):
	"""Forward pass and weighted loss.

	Returns:
		(total, loss_rf, loss_id) scalar Tensors
	"""
	out = model(batch.target_visual, batch.target_audio, batch.reference_visual, batch.reference_audio)
	loss_rf, loss_id = loss_terms(out.rf_logits, batch.y_fake, out.id_logits, batch.y_id_match)
	return combine(loss_rf, loss_id, weights), loss_rf, loss_id


def _validate(model, dataset, eval_settings, limit):
	"""ACC/AUC/AP on the first VAL pairs, or {} when VAL cannot be scored."""
	if not dataset.targets(Split.VAL):
		return {}
	try:
		report, _ = evaluate(DetectorScorer(model, eval_settings.batch_size), dataset, Split.VAL, eval_settings, limit)
	except ValidationError as e:
		logger.warning("Skipping VAL metrics: %s", e)
		return {}
	finally:
		model.train()
	return {"val_acc": report.acc, "val_auc": report.auc, "val_ap": report.ap}


def train(dataset, model_settings, train_settings, eval_settings=None, out_dir=None, progress=True):
	"""Train a detector on the TRAIN split.

	Args:
		dataset: Dataset
		model_settings: ModelSettings
		train_settings: TrainSettings
		eval_settings: EvalSettings used for VAL monitoring (skipped when None)
		out_dir: Where model.bin and train_log.jsonl go (nothing written when None)
		progress: Show a progress bar

	Returns:
		TrainResult
	"""
	s = train_settings
	geometry = dataset.geometry
	check_geometry(model_settings, geometry, dataset.meta["settings"]["d_raw"])

	model = build_model(model_settings, seed=s.seed).train()
	params = model.parameters()
	param_count = model.num_parameters()
	logger.info("Model has %d parameters (reference_mode=%s)", param_count, model.reference_mode)

	weights = LossWeights.from_settings(s)
	optimizer = Adam(
		params,
		AdamState(
			base_lr=s.base_lr,
			min_lr=s.min_lr,
			warmup_steps=s.warmup_steps,
			total_steps=s.steps,
			beta1=s.beta1,
			beta2=s.beta2,
			eps=s.adam_eps,
		),
	)
	sampler = pair_sampler(dataset, "train", np.random.default_rng([s.seed, 4]))
	crop_rng = np.random.default_rng([s.seed, 6])

	history = [{"step": 0, "event": "start", "param_count": param_count}]
	log_file = None
	if out_dir is not None:
		out = Path(out_dir)
		out.mkdir(parents=True, exist_ok=True)
		log_file = open(out / TRAIN_LOG, "w", encoding="utf-8", newline="\n")

	def emit(row):
		history.append(row)
		if log_file is not None:
			log_file.write(json.dumps(row, sort_keys=True) + "\n")

	try:
		if log_file is not None:
			log_file.write(json.dumps(history[0], sort_keys=True) + "\n")

		for step in tqdm(range(s.steps), desc="Training", disable=not progress):
			batch = make_batch([next(sampler) for _ in range(s.batch_size)], geometry, crop_rng)
			optimizer.zero_grad()
			total, loss_rf, loss_id = loss_on_batch(model, batch, weights)
			if not (total.is_finite() and loss_rf.is_finite() and loss_id.is_finite()):
				log_error("train", f"loss={total.item()} at step {step}", "Non-Finite Loss")
				raise NonFiniteError(f"Non-finite loss at step {step}")
			total.backward()
			lr = optimizer.step()

			done = step + 1
			row = None
			if done % s.log_every == 0 or done == s.steps:
				row = {
					"step": done,
					"lr": lr,
					"loss": total.item(),
					"loss_rf": loss_rf.item(),
					"loss_id": loss_id.item(),
				}
				logger.info("step %d lr=%.3g loss=%.4f (rf=%.4f id=%.4f)", done, lr, row["loss"], row["loss_rf"], row["loss_id"])
			if eval_settings is not None and s.eval_every and (done % s.eval_every == 0 or done == s.steps):
				row = row or {"step": done, "lr": lr}
				row.update(_validate(model, dataset, eval_settings, s.val_pairs))
			if row is not None:
				emit(row)
	finally:
		if log_file is not None:
			log_file.close()

	model.eval()
	result = TrainResult(model=model, history=history, param_count=param_count)
	if out_dir is not None:
		result.checkpoint_path = Path(out_dir) / CHECKPOINT
		checkpoint.save(result.checkpoint_path, model.state_dict())
		logger.info("Saved checkpoint to %s", result.checkpoint_path)
	return result

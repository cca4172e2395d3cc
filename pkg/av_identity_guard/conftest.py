"""Shared fixtures: small settings, a tiny generated dataset and a tiny model."""

import numpy as np
import pytest

from av_identity_guard.settings.dataset_settings.dataset_settings import DatasetSettings
from av_identity_guard.settings.eval_settings.eval_settings import EvalSettings
from av_identity_guard.settings.model_settings.model_settings import ModelSettings
from av_identity_guard.settings.train_settings.train_settings import TrainSettings
from av_identity_guard.synthworld.dataset import Dataset, generate_dataset

TINY_DATASET = {
	"seed": 7,
	"n_speakers": 5,
	"clips_per_speaker": 14,
	"held_out_speakers": 1,
	"train_references": 2,
	"eval_references": 2,
	"min_segments": 8,
	"max_segments": 12,
	"d_id": 8,
	"d_raw": 16,
}

TINY_MODEL = {
	"d_model": 16,
	"d_raw": 16,
	"n_queries": 3,
	"idb_layers": 1,
	"match_layers": 1,
	"av_layers": 1,
	"num_heads": 2,
	"ffn_mult": 2,
	"dropout": 0.0,
}


@pytest.fixture
def rng():
	return np.random.default_rng(1234)


@pytest.fixture
def tiny_dataset_settings():
	return DatasetSettings(TINY_DATASET)


@pytest.fixture
def tiny_model_settings():
	return ModelSettings(TINY_MODEL)


@pytest.fixture
def tiny_train_settings():
	return TrainSettings(
		{"steps": 4, "batch_size": 4, "warmup_steps": 1, "log_every": 2, "eval_every": 0, "base_lr": 1e-3, "min_lr": 1e-4}
	)


@pytest.fixture
def eval_settings():
	return EvalSettings()


@pytest.fixture(scope="session")
def tiny_dataset_dir(tmp_path_factory):
	out = tmp_path_factory.mktemp("tiny_dataset")
	generate_dataset(DatasetSettings(TINY_DATASET), out, progress=False)
	return out


@pytest.fixture(scope="session")
def tiny_dataset(tiny_dataset_dir):
	return Dataset.load(tiny_dataset_dir)

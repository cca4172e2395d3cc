import numpy as np
import pytest

from av_identity_guard.avformer import DetectorModel, build_model, check_geometry, loss_terms, total_loss
from av_identity_guard.exceptions import ConfigError
from av_identity_guard.featpipe import SegmentConfig
from av_identity_guard.idb import TokenSource
from av_identity_guard.numcore import precision
from av_identity_guard.numcore.gradcheck import check_gradients
from av_identity_guard.settings.model_settings.model_settings import ModelSettings

SMALL = {
	"d_model": 8,
	"d_raw": 4,
	"n_queries": 2,
	"idb_layers": 1,
	"match_layers": 1,
	"av_layers": 1,
	"num_heads": 2,
	"ffn_mult": 2,
	"dropout": 0.0,
}


def _settings(**changes):
	return ModelSettings({**SMALL, **changes})


def _windows(rng, batch=2, d_raw=4):
	return (
		rng.normal(size=(batch, 32, d_raw)),
		rng.normal(size=(batch, 48, d_raw)),
		rng.normal(size=(batch, 32, d_raw)),
		rng.normal(size=(batch, 48, d_raw)),
	)


def test_forward_shapes(rng):
	model = build_model(_settings())
	out = model(*_windows(rng))
	assert out.rf_logits.shape == (2, 2)
	assert out.id_logits.shape == (2, 2)
	assert out.cls_out.shape == (2, 8)
	assert out.refined.source is TokenSource.REFINED
	probs = out.fake_probability()
	np.testing.assert_allclose(probs.sum(axis=-1), 1.0, rtol=1e-6)


def test_build_is_seeded():
	first = build_model(_settings(), seed=3).state_dict()
	second = build_model(_settings(), seed=3).state_dict()
	other = build_model(_settings(), seed=4).state_dict()
	assert list(first) == list(second)
	assert all(np.array_equal(first[k], second[k]) for k in first)
	assert not all(np.array_equal(first[k], other[k]) for k in first)


def test_parameters_carry_their_names():
	model = build_model(_settings())
	for name, p in model.named_parameters():
		assert p.name == name


def test_reference_changes_the_verdict(rng):
	model = build_model(_settings())
	tv, ta, rv, ra = _windows(rng)
	first = model(tv, ta, rv, ra)
	second = model(tv, ta, rv + 1.0, ra - 1.0)
	assert not np.array_equal(first.rf_logits.data, second.rf_logits.data)
	assert not np.array_equal(first.id_logits.data, second.id_logits.data)


def test_passthrough_ignores_the_reference(rng):
	model = build_model(_settings(reference_mode="passthrough"))
	tv, ta, rv, ra = _windows(rng)
	with_ref = model(tv, ta, rv, ra).rf_logits.data
	without = model(tv, ta).rf_logits.data
	np.testing.assert_array_equal(with_ref, without)


def test_constant_reference_ignores_the_reference(rng):
	model = build_model(_settings(reference_mode="constant"))
	tv, ta, rv, ra = _windows(rng)
	np.testing.assert_array_equal(model(tv, ta, rv, ra).rf_logits.data, model(tv, ta).rf_logits.data)


def test_ablations_remove_exactly_their_parameters():
	full = build_model(_settings())
	n_full = full.num_parameters()

	matcher_blocks = sum(block.num_parameters() for block in full.matcher.blocks)
	assert n_full - build_model(_settings(reference_mode="passthrough")).num_parameters() == matcher_blocks

	constant = build_model(_settings(reference_mode="constant"))
	assert constant.num_parameters() - n_full == SMALL["n_queries"] * SMALL["d_model"]

	separate = build_model(_settings(share_idb=0))
	assert separate.num_parameters() - n_full == full.idb.num_parameters()

	assert n_full - build_model(_settings(use_type_embeddings=0)).num_parameters() == 3 * SMALL["d_model"]

	no_ffn = build_model(_settings(match_ffn=0))
	block = full.matcher.blocks[0]
	assert n_full - no_ffn.num_parameters() == block.ffn.num_parameters() + block.ln_ffn.num_parameters()


def test_heads_train_separately(rng):
	model = build_model(_settings())
	tv, ta, rv, ra = _windows(rng)

	out = model(tv, ta, rv, ra)
	loss_rf, loss_id = loss_terms(out.rf_logits, [0, 1], out.id_logits, [1, 0])
	loss_id.backward()
	assert model.avformer.rf_head.weight.grad is None
	assert model.matcher.aux_fc1.weight.grad is not None

	model.zero_grad()
	out = model(tv, ta, rv, ra)
	loss_rf, _ = loss_terms(out.rf_logits, [0, 1], out.id_logits, [1, 0])
	loss_rf.backward()
	assert model.matcher.aux_fc1.weight.grad is None
	assert model.avformer.rf_head.weight.grad is not None
	assert model.assembler.visual_proj.weight.grad is not None


def test_end_to_end_gradients(rng):
	with precision("float64"):
		model = build_model(_settings(share_idb=0))
		tv, ta, rv, ra = _windows(rng)
		y_fake, y_id = [0, 1], [1, 0]

		def fn():
			out = model(tv, ta, rv, ra)
			return total_loss(out.rf_logits, y_fake, out.id_logits, y_id)

		params = model.parameters()
		picked = [params[i] for i in np.linspace(0, len(params) - 1, 20).astype(int)]
		assert check_gradients(fn, picked, indices=lambda t: range(min(t.data.size, 3))) < 1e-3


def test_unknown_reference_mode(rng):
	settings = _settings()
	settings.reference_mode = "none"
	with pytest.raises(ConfigError):
		DetectorModel(settings, rng)


def test_geometry_check():
	settings = _settings()
	check_geometry(settings, SegmentConfig(), 4)
	with pytest.raises(ConfigError):
		check_geometry(settings, SegmentConfig(t_a=4), 4)
	with pytest.raises(ConfigError):
		check_geometry(settings, SegmentConfig(), 16)

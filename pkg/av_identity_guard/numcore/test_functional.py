import math

import numpy as np
import pytest

from av_identity_guard.exceptions import DimensionError, ValidationError
from av_identity_guard.numcore import (
	Tensor,
	concat,
	cross_entropy,
	dropout,
	embedding,
	gelu,
	layer_norm,
	linear,
	mean_pool,
	multi_head_attention,
	precision,
	softmax,
)
from av_identity_guard.numcore.gradcheck import check_gradients


def _param(rng, *shape):
	return Tensor(rng.normal(size=shape), requires_grad=True)


# ==========================================================================
# softmax
# ==========================================================================


def test_softmax_symmetric():
	np.testing.assert_allclose(softmax(Tensor([0.0, 0.0])).data, [0.5, 0.5])


def test_softmax_is_stable_for_large_logits():
	out = softmax(Tensor([1000.0, 0.0])).data
	assert np.isfinite(out).all()
	assert out[0] == pytest.approx(1.0)
	assert out[1] == pytest.approx(0.0, abs=1e-12)


def test_softmax_reference_values():
	with precision("float64"):
		out = softmax(Tensor([1.0, 2.0, 3.0])).data
	np.testing.assert_allclose(out, [0.09003, 0.24473, 0.66524], atol=1e-5)


def test_softmax_rows_sum_to_one(rng):
	out = softmax(Tensor(rng.normal(size=(4, 7)) * 10), axis=-1).data
	assert (out >= 0).all()
	np.testing.assert_allclose(out.sum(axis=-1), 1.0, atol=1e-6)


def test_softmax_empty_axis_raises():
	with pytest.raises(DimensionError):
		softmax(Tensor(np.zeros((3, 0))), axis=-1)


def test_softmax_invalid_axis_raises():
	with pytest.raises(DimensionError):
		softmax(Tensor(np.zeros((3, 2))), axis=2)


def test_softmax_gradient(rng):
	with precision("float64"):
		x = _param(rng, 3, 5)
		w = rng.normal(size=(3, 5))
		assert check_gradients(lambda: (softmax(x, axis=0) * w).sum(), [x]) < 1e-4


# ==========================================================================
# layer_norm
# ==========================================================================


def test_layer_norm_constant_row_collapses_to_beta():
	out = layer_norm(Tensor([[2.0, 2.0, 2.0, 2.0]]), Tensor(np.ones(4)), Tensor(np.zeros(4)))
	np.testing.assert_allclose(out.data, 0.0, atol=1e-6)


def test_layer_norm_two_point_standardization():
	with precision("float64"):
		out = layer_norm(Tensor([1.0, 3.0]), Tensor(np.ones(2)), Tensor(np.zeros(2)), eps=1e-12)
	np.testing.assert_allclose(out.data, [-1.0, 1.0], atol=1e-9)


def test_layer_norm_dimension_mismatch():
	with pytest.raises(DimensionError):
		layer_norm(Tensor(np.zeros((2, 4))), Tensor(np.ones(3)), Tensor(np.zeros(3)))


def test_layer_norm_gradient(rng):
	with precision("float64"):
		x, gamma, beta = _param(rng, 5, 8), _param(rng, 8), _param(rng, 8)
		w = rng.normal(size=(5, 8))
		assert check_gradients(lambda: (layer_norm(x, gamma, beta) * w).sum(), [x, gamma, beta]) < 1e-4


# ==========================================================================
# cross_entropy
# ==========================================================================


def test_cross_entropy_uniform_two_class():
	assert cross_entropy(Tensor([[0.0, 0.0]]), [0]).item() == pytest.approx(math.log(2), abs=1e-6)


def test_cross_entropy_confident_correct():
	assert cross_entropy(Tensor([[100.0, 0.0]]), [0]).item() == pytest.approx(0.0, abs=1e-6)


def test_cross_entropy_reference_value():
	with precision("float64"):
		assert cross_entropy(Tensor([[1.0, 2.0, 3.0]]), [2]).item() == pytest.approx(0.40761, abs=1e-5)


def test_cross_entropy_out_of_range_label():
	with pytest.raises(ValidationError):
		cross_entropy(Tensor([[0.0, 0.0]]), [2])


def test_cross_entropy_gradient(rng):
	with precision("float64"):
		logits = _param(rng, 6, 3)
		labels = rng.integers(0, 3, size=6)
		assert check_gradients(lambda: cross_entropy(logits, labels), [logits]) < 1e-4


# ==========================================================================
# Remaining primitives
# ==========================================================================


def test_gelu_gradient(rng):
	with precision("float64"):
		x = _param(rng, 4, 6)
		assert check_gradients(lambda: (gelu(x) * x).sum(), [x]) < 1e-4


def test_gelu_at_zero():
	assert gelu(Tensor([0.0])).data.tolist() == [0.0]


def test_linear_gradient(rng):
	with precision("float64"):
		x, w, b = _param(rng, 2, 3, 4), _param(rng, 4, 5), _param(rng, 5)
		target = rng.normal(size=(2, 3, 5))
		assert check_gradients(lambda: (linear(x, w, b) * target).sum(), [x, w, b]) < 1e-4


def test_linear_on_vector():
	out = linear(Tensor([1.0, 2.0]), Tensor([[1.0, 0.0, 1.0], [0.0, 1.0, 1.0]]), Tensor([0.5, 0.5, 0.5]))
	np.testing.assert_allclose(out.data, [1.5, 2.5, 3.5])


def test_multi_head_attention_gradient(rng):
	with precision("float64"):
		q, k, v = _param(rng, 2, 3, 8), _param(rng, 2, 5, 8), _param(rng, 2, 5, 8)
		w = rng.normal(size=(2, 3, 8))
		assert check_gradients(lambda: (multi_head_attention(q, k, v, 2) * w).sum(), [q, k, v]) < 1e-4


def test_attention_rows_are_distributions(rng):
	q, k, v = (Tensor(rng.normal(size=(3, 4, 8))) for _ in range(3))
	_, weights = multi_head_attention(q, k, v, 4, return_weights=True)
	assert weights.shape == (3, 4, 4, 4)
	assert (weights.data >= 0).all()
	np.testing.assert_allclose(weights.data.sum(axis=-1), 1.0, atol=1e-5)


def test_heads_are_independent(rng):
	q, k, v = (rng.normal(size=(4, 8)) for _ in range(3))
	base = multi_head_attention(Tensor(q), Tensor(k), Tensor(v), 2).data
	k2 = k.copy()
	k2[:, 4:] += rng.normal(size=(4, 4))
	changed = multi_head_attention(Tensor(q), Tensor(k2), Tensor(v), 2).data
	np.testing.assert_allclose(base[:, :4], changed[:, :4], rtol=1e-6)
	assert not np.allclose(base[:, 4:], changed[:, 4:])


def test_attention_head_count_must_divide(rng):
	x = Tensor(rng.normal(size=(3, 6)))
	with pytest.raises(DimensionError):
		multi_head_attention(x, x, x, 4)


def test_dropout_is_identity_at_eval(rng):
	x = Tensor(rng.normal(size=(4, 4)))
	assert dropout(x, 0.5, np.random.default_rng(0), training=False) is x


def test_dropout_is_seeded_and_scaled():
	x = Tensor(np.ones((50, 50)))
	a = dropout(x, 0.1, np.random.default_rng(5)).data
	b = dropout(x, 0.1, np.random.default_rng(5)).data
	np.testing.assert_array_equal(a, b)
	kept = a[a != 0]
	assert 0 < kept.size < a.size
	np.testing.assert_allclose(kept, 1.0 / 0.9, rtol=1e-6)


def test_dropout_gradient_uses_mask(rng):
	x = Tensor(rng.normal(size=(6, 6)), requires_grad=True)
	out = dropout(x, 0.5, np.random.default_rng(2))
	out.sum().backward()
	np.testing.assert_array_equal(x.grad != 0, out.data != 0)


def test_mean_pool_concat_embedding_gradients(rng):
	with precision("float64"):
		a, b = _param(rng, 2, 3, 4), _param(rng, 2, 1, 4)
		table = _param(rng, 5, 4)
		idx = np.array([0, 3, 3, 1])

		def fn():
			joined = concat([a, b], axis=1)
			pooled = mean_pool(joined, axis=1)
			return (pooled * embedding(table, idx)[:2]).sum() + embedding(table, idx).sum()

		assert check_gradients(fn, [a, b, table]) < 1e-4


def test_mean_pool_of_identical_rows():
	row = np.array([1.0, -2.0, 0.5])
	np.testing.assert_allclose(mean_pool(Tensor(np.tile(row, (6, 1))), axis=0).data, row)


def test_concat_shape_mismatch():
	with pytest.raises(DimensionError):
		concat([Tensor(np.zeros((2, 3))), Tensor(np.zeros((2, 4)))], axis=0)


def test_embedding_out_of_range():
	with pytest.raises(DimensionError):
		embedding(Tensor(np.zeros((3, 2))), [3])

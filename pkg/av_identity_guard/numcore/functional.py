"""Neural-network primitives built on Tensor.

Fused ops (softmax, layer_norm, gelu, cross_entropy) carry their own analytic
backward; the rest are compositions of Tensor operations.
"""

import math

import numpy as np

from av_identity_guard.exceptions import DimensionError, ValidationError
from av_identity_guard.numcore.tensor import Tensor, matmul

_GELU_C = math.sqrt(2.0 / math.pi)


def _normalize_axis(x, axis):
	if not -x.ndim <= axis < x.ndim:
		raise DimensionError(f"Axis {axis} is out of range for shape {x.shape}")
	return axis % x.ndim


def softmax(x, axis=-1):
	"""Numerically stable softmax along `axis`."""
	axis = _normalize_axis(x, axis)
	if x.shape[axis] == 0:
		raise DimensionError(f"softmax over an empty axis of shape {x.shape}")

	shifted = x.data - x.data.max(axis=axis, keepdims=True)
	exps = np.exp(shifted)
	probs = exps / exps.sum(axis=axis, keepdims=True)

	def backward(grad):
		return (probs * (grad - (grad * probs).sum(axis=axis, keepdims=True)),)

	return Tensor._from_op(probs, (x,), backward)


def layer_norm(x, gamma, beta, eps=1e-5):
	"""Normalize the last axis to zero mean / unit variance, then scale and shift.

	Args:
		x: Tensor [..., D]
		gamma: Tensor [D]
		beta: Tensor [D]
		eps: Variance floor

	Returns:
		Tensor with the shape of x
	"""
	d = x.shape[-1]
	if gamma.shape != (d,) or beta.shape != (d,):
		raise DimensionError(f"layer_norm affine shapes {gamma.shape}/{beta.shape} do not match input {x.shape}")

	centered = x.data - x.data.mean(axis=-1, keepdims=True)
	inv_std = 1.0 / np.sqrt((centered * centered).mean(axis=-1, keepdims=True) + eps)
	x_hat = centered * inv_std
	g = gamma.data
	reduce_axes = tuple(range(x.ndim - 1))

	def backward(grad):
		d_xhat = grad * g
		d_x = inv_std * (
			d_xhat
			- d_xhat.mean(axis=-1, keepdims=True)
			- x_hat * (d_xhat * x_hat).mean(axis=-1, keepdims=True)
		)
		return d_x, (grad * x_hat).sum(axis=reduce_axes), grad.sum(axis=reduce_axes)

	return Tensor._from_op(x_hat * g + beta.data, (x, gamma, beta), backward)


def gelu(x):
	"""GELU, tanh approximation."""
	a = x.data
	inner = _GELU_C * (a + 0.044715 * a**3)
	t = np.tanh(inner)

	def backward(grad):
		d_inner = _GELU_C * (1.0 + 3.0 * 0.044715 * a * a)
		return (grad * (0.5 * (1.0 + t) + 0.5 * a * (1.0 - t * t) * d_inner),)

	return Tensor._from_op(0.5 * a * (1.0 + t), (x,), backward)


def cross_entropy(logits, labels):
	"""Mean negative log-likelihood of integer labels under softmax(logits).

	Args:
		logits: Tensor [B, C]
		labels: integer array-like [B]

	Returns:
		scalar Tensor
	"""
	if logits.ndim != 2:
		raise DimensionError(f"cross_entropy expects [B, C] logits, got {logits.shape}")
	labels = np.asarray(labels, dtype=np.int64).reshape(-1)
	batch, classes = logits.shape
	if labels.shape[0] != batch:
		raise DimensionError(f"cross_entropy got {labels.shape[0]} labels for logits {logits.shape}")
	if labels.size and (labels.min() < 0 or labels.max() >= classes):
		raise ValidationError(f"Labels must lie in [0, {classes}), got {labels.tolist()}")

	z = logits.data
	shifted = z - z.max(axis=1, keepdims=True)
	log_norm = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
	log_probs = shifted - log_norm
	rows = np.arange(batch)
	loss = -log_probs[rows, labels].mean()

	def backward(grad):
		d = np.exp(log_probs)
		d[rows, labels] -= 1.0
		return (d * (grad / batch),)

	return Tensor._from_op(np.asarray(loss, dtype=z.dtype), (logits,), backward)


def linear(x, weight, bias=None):
	"""Affine map x @ weight + bias with weight laid out [in, out]."""
	if x.shape[-1] != weight.shape[0]:
		raise DimensionError(f"linear input {x.shape} does not match weight {weight.shape}")
	out = matmul(x, weight) if x.ndim >= 2 else matmul(x.reshape(1, -1), weight).reshape(-1)
	return out if bias is None else out + bias


def scaled_dot_product_attention(q, k, v):
	"""softmax(q k^T / sqrt(d)) v over the last two axes.

	Returns:
		(output, attention weights)
	"""
	scale = 1.0 / math.sqrt(q.shape[-1])
	weights = softmax(matmul(q, k.swapaxes(-1, -2)) * scale, axis=-1)
	return matmul(weights, v), weights


def split_heads(x, num_heads):
	"""[..., L, D] -> [..., H, L, D/H]"""
	d = x.shape[-1]
	if d % num_heads:
		raise DimensionError(f"Model dimension {d} is not divisible by {num_heads} heads")
	return x.reshape(*x.shape[:-1], num_heads, d // num_heads).swapaxes(-2, -3)


def merge_heads(x):
	"""[..., H, L, Dh] -> [..., L, H*Dh]"""
	x = x.swapaxes(-2, -3)
	return x.reshape(*x.shape[:-2], x.shape[-2] * x.shape[-1])


def multi_head_attention(q, k, v, num_heads, return_weights=False):
	"""Per-head scaled dot-product attention over already projected q, k, v.

	Args:
		q: Tensor [..., Lq, D]
		k: Tensor [..., Lk, D]
		v: Tensor [..., Lk, D]
		num_heads: Number of heads; must divide D
		return_weights: Also return the [..., H, Lq, Lk] attention weights

	Returns:
		Tensor [..., Lq, D] (and the weights when requested)
	"""
	if k.shape != v.shape:
		raise DimensionError(f"Key shape {k.shape} differs from value shape {v.shape}")
	if q.shape[-1] != k.shape[-1]:
		raise DimensionError(f"Query shape {q.shape} does not match key shape {k.shape}")

	out, weights = scaled_dot_product_attention(
		split_heads(q, num_heads), split_heads(k, num_heads), split_heads(v, num_heads)
	)
	out = merge_heads(out)
	return (out, weights) if return_weights else out


def dropout(x, rate, rng, training=True):
	"""Inverted dropout; identity outside training or at rate 0."""
	if not training or rate == 0.0:
		return x
	if not 0.0 <= rate < 1.0:
		raise ValidationError(f"Dropout rate must lie in [0, 1), got {rate}")
	mask = (rng.random(x.shape) >= rate).astype(x.dtype) / (1.0 - rate)
	return Tensor._from_op(x.data * mask, (x,), lambda grad: (grad * mask,))


def mean_pool(x, axis):
	return x.mean(axis=_normalize_axis(x, axis))


def concat(tensors, axis=0):
	"""Concatenate tensors along `axis`."""
	if not tensors:
		raise DimensionError("concat needs at least one tensor")
	axis = _normalize_axis(tensors[0], axis)
	try:
		data = np.concatenate([t.data for t in tensors], axis=axis)
	except ValueError as e:
		shapes = [t.shape for t in tensors]
		raise DimensionError(f"Cannot concatenate shapes {shapes} along axis {axis}") from e
	bounds = np.cumsum([t.shape[axis] for t in tensors])[:-1]

	def backward(grad):
		return tuple(np.split(grad, bounds, axis=axis))

	return Tensor._from_op(data, tuple(tensors), backward)


def embedding(table, indices):
	"""Row lookup table[indices]; repeated indices accumulate gradient."""
	indices = np.asarray(indices, dtype=np.int64)
	if indices.size and (indices.min() < 0 or indices.max() >= table.shape[0]):
		raise DimensionError(f"Embedding indices out of range for table {table.shape}")
	return table[indices]

"""Minimal dense-tensor engine with reverse-mode autodiff, layers and Adam."""

from av_identity_guard.numcore.functional import (
	concat,
	cross_entropy,
	dropout,
	embedding,
	gelu,
	layer_norm,
	linear,
	mean_pool,
	multi_head_attention,
	softmax,
)
from av_identity_guard.numcore.layers import (
	Dropout,
	FeedForward,
	LayerNorm,
	Linear,
	Module,
	MultiHeadAttention,
	parameter,
	trunc_normal,
)
from av_identity_guard.numcore.optim import Adam, AdamState, adam_step
from av_identity_guard.numcore.tensor import Tensor, get_default_dtype, matmul, precision

"""Parameter containers and the layers the detector is assembled from."""

import numpy as np

from av_identity_guard.exceptions import CheckpointError, DimensionError
from av_identity_guard.numcore import functional as F
from av_identity_guard.numcore.tensor import Tensor, get_default_dtype


def trunc_normal(rng, shape, std=0.02):
	"""Normal(0, std) samples, resampled until they fall within two std."""
	values = rng.normal(0.0, std, size=shape)
	outside = np.abs(values) > 2 * std
	while outside.any():
		values[outside] = rng.normal(0.0, std, size=int(outside.sum()))
		outside = np.abs(values) > 2 * std
	return values


def parameter(data, name=None):
	return Tensor(np.array(data, dtype=get_default_dtype()), requires_grad=True, name=name)


class Module:
	"""Base class: owns parameters and child modules as plain attributes."""

	training = True

	def named_parameters(self, prefix=""):
		"""Yield (dotted name, Tensor) for every parameter, in definition order."""
		for attr, value in vars(self).items():
			if attr.startswith("_"):
				continue
			path = f"{prefix}{attr}"
			if isinstance(value, Tensor) and value.requires_grad:
				yield path, value
			elif isinstance(value, Module):
				yield from value.named_parameters(f"{path}.")
			elif isinstance(value, list):
				for i, item in enumerate(value):
					if isinstance(item, Module):
						yield from item.named_parameters(f"{path}.{i}.")

	def parameters(self):
		return [p for _, p in self.named_parameters()]

	def modules(self):
		yield self
		for attr, value in vars(self).items():
			if attr.startswith("_"):
				continue
			if isinstance(value, Module):
				yield from value.modules()
			elif isinstance(value, list):
				for item in value:
					if isinstance(item, Module):
						yield from item.modules()

	def num_parameters(self):
		return int(sum(p.data.size for p in self.parameters()))

	def train(self, mode=True):
		for module in self.modules():
			module.training = mode
		return self

	def eval(self):
		return self.train(False)

	def zero_grad(self):
		for p in self.parameters():
			p.grad = None

	def state_dict(self):
		return {name: p.data for name, p in self.named_parameters()}

	def load_state_dict(self, state, strict=True):
		"""Copy arrays from `state` into the parameters, checking names and shapes."""
		own = dict(self.named_parameters())
		missing = [name for name in own if name not in state]
		unexpected = [name for name in state if name not in own]
		if strict and (missing or unexpected):
			raise CheckpointError(f"State mismatch: missing {missing[:5]}, unexpected {unexpected[:5]}")

		for name, p in own.items():
			if name not in state:
				continue
			value = np.asarray(state[name])
			if value.shape != p.shape:
				raise DimensionError(f"Parameter {name}: checkpoint shape {value.shape} vs model {p.shape}")
			p.data = value.astype(p.dtype)

	def name_parameters(self, prefix=""):
		"""Stamp each parameter with its dotted name, used in error messages."""
		for name, p in self.named_parameters(prefix):
			p.name = name
		return self

	def __call__(self, *args, **kwargs):
		return self.forward(*args, **kwargs)


class Linear(Module):
	"""Affine layer, weight [in, out] truncated-normal, bias zero."""

	def __init__(self, d_in, d_out, rng, bias=True):
		self.weight = parameter(trunc_normal(rng, (d_in, d_out)))
		self.bias = parameter(np.zeros(d_out)) if bias else None

	def forward(self, x):
		return F.linear(x, self.weight, self.bias)


class LayerNorm(Module):
	def __init__(self, d, eps=1e-5):
		self.gamma = parameter(np.ones(d))
		self.beta = parameter(np.zeros(d))
		self._eps = eps

	def forward(self, x):
		return F.layer_norm(x, self.gamma, self.beta, self._eps)


class Dropout(Module):
	"""Seeded dropout; the generator is owned by the layer."""

	def __init__(self, rate, rng):
		self._rate = rate
		self._rng = rng

	def forward(self, x):
		return F.dropout(x, self._rate, self._rng, self.training)


class MultiHeadAttention(Module):
	"""Projected multi-head attention; the query and key/value inputs may differ."""

	def __init__(self, d, num_heads, rng, dropout=0.0):
		if d % num_heads:
			raise DimensionError(f"Model dimension {d} is not divisible by {num_heads} heads")
		self.q_proj = Linear(d, d, rng)
		self.k_proj = Linear(d, d, rng)
		self.v_proj = Linear(d, d, rng)
		self.out_proj = Linear(d, d, rng)
		self.drop = Dropout(dropout, rng)
		self._num_heads = num_heads

	@property
	def num_heads(self):
		return self._num_heads

	def forward(self, query, key_value, return_weights=False):
		out, weights = F.multi_head_attention(
			self.q_proj(query),
			self.k_proj(key_value),
			self.v_proj(key_value),
			self._num_heads,
			return_weights=True,
		)
		out = self.drop(self.out_proj(out))
		return (out, weights) if return_weights else out


class FeedForward(Module):
	"""Linear -> GELU -> Linear with expansion `mult`."""

	def __init__(self, d, mult, rng, dropout=0.0):
		self.fc_in = Linear(d, d * mult, rng)
		self.fc_out = Linear(d * mult, d, rng)
		self.drop = Dropout(dropout, rng)

	def forward(self, x):
		return self.drop(self.fc_out(F.gelu(self.fc_in(x))))

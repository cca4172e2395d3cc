"""Adam with a linear-warmup, cosine-annealed learning rate."""

import math
from dataclasses import dataclass, field

import numpy as np

from av_identity_guard.exceptions import ConfigError, NonFiniteError, ValidationError


@dataclass
class AdamState:
	"""Optimizer hyper-parameters, schedule position and moment buffers."""

	base_lr: float = 1e-5
	min_lr: float = 1e-6
	warmup_steps: int = 0
	total_steps: int = 1
	beta1: float = 0.9
	beta2: float = 0.999
	eps: float = 1e-8
	step: int = 0
	m: list = field(default_factory=list)
	v: list = field(default_factory=list)

	def __post_init__(self):
		if not 0 < self.min_lr <= self.base_lr:
			raise ConfigError(f"Need 0 < min_lr <= base_lr, got min_lr={self.min_lr}, base_lr={self.base_lr}")
		if self.total_steps < 1:
			raise ConfigError(f"total_steps must be positive, got {self.total_steps}")
		if not 0 <= self.warmup_steps < self.total_steps:
			raise ConfigError(f"Need 0 <= warmup_steps < total_steps, got {self.warmup_steps}/{self.total_steps}")

	def lr_at(self, step):
		"""Learning rate for a 0-based step index.

		Linear ramp 0 -> base_lr over the warmup steps, then cosine decay that
		reaches min_lr exactly at the last step.
		"""
		if step < self.warmup_steps:
			return self.base_lr * step / self.warmup_steps
		decay_steps = max(1, self.total_steps - 1 - self.warmup_steps)
		progress = min(1.0, (step - self.warmup_steps) / decay_steps)
		return self.min_lr + (self.base_lr - self.min_lr) * 0.5 * (1.0 + math.cos(math.pi * progress))


def adam_step(params, grads, state):
	"""Apply one bias-corrected Adam update in place.

	Args:
		params: list of parameter Tensors
		grads: list of gradient arrays aligned with params (None counts as zero)
		state: AdamState, advanced by one step

	Returns:
		The learning rate used for this step
	"""
	if len(params) != len(grads):
		raise ValidationError(f"Got {len(grads)} gradients for {len(params)} parameters")
	if state.step >= state.total_steps:
		raise ValidationError(f"Schedule exhausted: step {state.step} of {state.total_steps}")
	if not state.m:
		state.m = [np.zeros_like(p.data) for p in params]
		state.v = [np.zeros_like(p.data) for p in params]

	for i, (p, g) in enumerate(zip(params, grads)):
		if g is None:
			continue
		if g.shape != p.shape or state.m[i].shape != p.shape:
			raise ValidationError(f"Gradient/moment shape mismatch for {p.name or i}: {g.shape} vs {p.shape}")
		if not np.isfinite(g).all():
			raise NonFiniteError(f"Non-finite gradient for parameter {p.name or i} at step {state.step}")

	lr = state.lr_at(state.step)
	t = state.step + 1
	correction1 = 1.0 - state.beta1**t
	correction2 = 1.0 - state.beta2**t

	for i, (p, g) in enumerate(zip(params, grads)):
		if g is None:
			continue
		state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g
		state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * (g * g)
		m_hat = state.m[i] / correction1
		v_hat = state.v[i] / correction2
		p.data = (p.data - lr * m_hat / (np.sqrt(v_hat) + state.eps)).astype(p.dtype)

	state.step += 1
	return lr


class Adam:
	"""Convenience wrapper binding a parameter list to an AdamState."""

	def __init__(self, params, state):
		self.params = list(params)
		self.state = state

	def zero_grad(self):
		for p in self.params:
			p.grad = None

	def step(self):
		return adam_step(self.params, [p.grad for p in self.params], self.state)

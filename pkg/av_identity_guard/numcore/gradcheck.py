"""Central finite-difference checks for analytic gradients."""

import numpy as np


def numerical_gradient(fn, tensor, h=1e-5, indices=None):
	"""Central differences of scalar `fn()` w.r.t. entries of `tensor`.

	Args:
		fn: Zero-argument callable returning a scalar Tensor
		tensor: Tensor whose data is perturbed in place and restored
		h: Step size
		indices: Optional iterable of flat indices; all entries by default

	Returns:
		dict flat index -> derivative estimate
	"""
	tensor.data = np.require(tensor.data, requirements="C")
	flat = tensor.data.reshape(-1)
	indices = range(flat.size) if indices is None else indices
	estimates = {}
	for i in indices:
		original = flat[i]
		flat[i] = original + h
		plus = float(fn().data)
		flat[i] = original - h
		minus = float(fn().data)
		flat[i] = original
		estimates[i] = (plus - minus) / (2.0 * h)
	return estimates


def relative_error(analytic, numeric, floor=1e-8):
	"""max |a - n| / max(|a|, |n|), falling back to absolute error near zero."""
	analytic = np.asarray(analytic, dtype=np.float64)
	numeric = np.asarray(numeric, dtype=np.float64)
	scale = max(np.abs(analytic).max(initial=0.0), np.abs(numeric).max(initial=0.0))
	diff = np.abs(analytic - numeric).max(initial=0.0)
	return diff if scale < floor else diff / scale


def check_gradients(fn, tensors, h=1e-5, indices=None):
	"""Compare backward() against central differences for every tensor.

	The tensors must already be part of `fn`'s graph and require grad. Run
	inside `precision("float64")` for meaningful tolerances.

	Returns:
		The worst relative error over all tensors
	"""
	for t in tensors:
		t.grad = None
	fn().backward()
	analytic = [np.zeros_like(t.data) if t.grad is None else t.grad.copy() for t in tensors]

	worst = 0.0
	for t, grad in zip(tensors, analytic):
		picked = indices(t) if callable(indices) else indices
		numeric = numerical_gradient(fn, t, h=h, indices=picked)
		keys = list(numeric)
		worst = max(worst, relative_error(grad.reshape(-1)[keys], [numeric[k] for k in keys]))
	return worst

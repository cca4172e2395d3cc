"""Dense tensor with reverse-mode automatic differentiation.

Every operation returns a new Tensor. When any input requires a gradient the
output remembers its parents and a closure mapping the output gradient to one
gradient per parent; `Tensor.backward` walks that graph in reverse
topological order and accumulates gradients into the leaves.
"""

from contextlib import contextmanager

import numpy as np

from av_identity_guard.exceptions import DimensionError, NonFiniteError

_PRECISIONS = {
	"float32": np.float32,
	"float64": np.float64,
}

_default_dtype = np.float32


def get_default_dtype():
	"""Return the numpy dtype new tensors are created with."""
	return _default_dtype


@contextmanager
def precision(name):
	"""Temporarily switch the default dtype.

	Args:
		name: "float32" or "float64"

	Example:
		>>> with precision("float64"):
		...     model = build_model(settings, seed=0)
	"""
	global _default_dtype
	if name not in _PRECISIONS:
		raise ValueError(f"Unknown precision: {name}")

	previous = _default_dtype
	_default_dtype = _PRECISIONS[name]
	try:
		yield
	finally:
		_default_dtype = previous


def _unbroadcast(grad, shape):
	"""Sum `grad` down to `shape`, undoing numpy broadcasting."""
	while grad.ndim > len(shape):
		grad = grad.sum(axis=0)
	for axis, size in enumerate(shape):
		if size == 1 and grad.shape[axis] != 1:
			grad = grad.sum(axis=axis, keepdims=True)
	return grad


class Tensor:
	"""A dense float array that participates in reverse-mode differentiation."""

	def __init__(self, data, requires_grad=False, name=None, dtype=None):
		self.data = np.asarray(data, dtype=dtype or _default_dtype)
		self.requires_grad = bool(requires_grad)
		self.grad = None
		self.name = name
		self._parents = ()
		self._backward = None

	# ==========================================================================
	# Introspection
	# ==========================================================================

	@property
	def shape(self):
		return self.data.shape

	@property
	def ndim(self):
		return self.data.ndim

	@property
	def dtype(self):
		return self.data.dtype

	def __len__(self):
		return self.data.shape[0]

	def __repr__(self):
		label = f", name={self.name}" if self.name else ""
		grad = ", requires_grad=True" if self.requires_grad else ""
		return f"Tensor(shape={self.shape}{grad}{label})"

	def numpy(self):
		"""Return the underlying array (not a copy)."""
		return self.data

	def item(self):
		return float(self.data)

	def is_finite(self):
		return bool(np.isfinite(self.data).all())

	def check_finite(self, what=None):
		"""Raise NonFiniteError if the data holds NaN or Inf."""
		if not self.is_finite():
			raise NonFiniteError(f"Non-finite values in {what or self.name or 'tensor'}")
		return self

	def detach(self):
		return Tensor(self.data, dtype=self.data.dtype)

	def zero_grad(self):
		self.grad = None

	# ==========================================================================
	# Graph construction
	# ==========================================================================

	@staticmethod
	def _from_op(data, parents, backward):
		"""Wrap an op result, recording the graph only when a parent needs it."""
		out = Tensor(data, dtype=data.dtype)
		if any(parent.requires_grad for parent in parents):
			out.requires_grad = True
			out._parents = parents
			out._backward = backward
		return out

	def _coerce(self, other):
		if isinstance(other, Tensor):
			return other
		return Tensor(other, dtype=self.data.dtype)

	def backward(self, grad=None):
		"""Accumulate d(self)/d(leaf) into every leaf's `.grad`.

		Args:
			grad: Seed gradient, defaults to ones (a scalar loss gets 1.0)
		"""
		if not self.requires_grad:
			raise ValueError("backward() called on a tensor that does not require grad")

		seed = np.ones_like(self.data) if grad is None else np.asarray(grad, dtype=self.data.dtype)
		if seed.shape != self.shape:
			raise DimensionError(f"Seed gradient shape {seed.shape} does not match tensor shape {self.shape}")

		grads = {id(self): seed}
		for node in reversed(_topological_order(self)):
			node_grad = grads.pop(id(node), None)
			if node_grad is None:
				continue

			if node._backward is None:
				node.grad = node_grad if node.grad is None else node.grad + node_grad
				continue

			for parent, parent_grad in zip(node._parents, node._backward(node_grad)):
				if parent_grad is None or not parent.requires_grad:
					continue
				key = id(parent)
				grads[key] = parent_grad if key not in grads else grads[key] + parent_grad

	# ==========================================================================
	# Elementwise arithmetic
	# ==========================================================================

	def __add__(self, other):
		other = self._coerce(other)
		a_shape, b_shape = self.shape, other.shape

		def backward(grad):
			return _unbroadcast(grad, a_shape), _unbroadcast(grad, b_shape)

		return Tensor._from_op(_broadcast_op(np.add, self, other), (self, other), backward)

	__radd__ = __add__

	def __sub__(self, other):
		other = self._coerce(other)
		a_shape, b_shape = self.shape, other.shape

		def backward(grad):
			return _unbroadcast(grad, a_shape), _unbroadcast(-grad, b_shape)

		return Tensor._from_op(_broadcast_op(np.subtract, self, other), (self, other), backward)

	def __rsub__(self, other):
		return self._coerce(other) - self

	def __mul__(self, other):
		other = self._coerce(other)
		a, b = self.data, other.data

		def backward(grad):
			return _unbroadcast(grad * b, a.shape), _unbroadcast(grad * a, b.shape)

		return Tensor._from_op(_broadcast_op(np.multiply, self, other), (self, other), backward)

	__rmul__ = __mul__

	def __truediv__(self, other):
		other = self._coerce(other)
		a, b = self.data, other.data

		def backward(grad):
			return _unbroadcast(grad / b, a.shape), _unbroadcast(-grad * a / (b * b), b.shape)

		return Tensor._from_op(_broadcast_op(np.divide, self, other), (self, other), backward)

	def __neg__(self):
		return Tensor._from_op(-self.data, (self,), lambda grad: (-grad,))

	# ==========================================================================
	# Linear algebra and shape manipulation
	# ==========================================================================

	def __matmul__(self, other):
		return matmul(self, other)

	def reshape(self, *shape):
		if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
			shape = tuple(shape[0])
		original = self.shape
		try:
			data = self.data.reshape(shape)
		except ValueError as e:
			raise DimensionError(f"Cannot reshape {original} into {shape}") from e
		return Tensor._from_op(data, (self,), lambda grad: (grad.reshape(original),))

	def swapaxes(self, axis1, axis2):
		return Tensor._from_op(
			np.swapaxes(self.data, axis1, axis2),
			(self,),
			lambda grad: (np.swapaxes(grad, axis1, axis2),),
		)

	def broadcast_to(self, shape):
		original = self.shape
		try:
			data = np.broadcast_to(self.data, shape)
		except ValueError as e:
			raise DimensionError(f"Cannot broadcast {original} to {tuple(shape)}") from e
		return Tensor._from_op(np.array(data), (self,), lambda grad: (_unbroadcast(grad, original),))

	def __getitem__(self, index):
		original, dtype = self.shape, self.data.dtype

		def backward(grad):
			full = np.zeros(original, dtype=dtype)
			np.add.at(full, index, grad)
			return (full,)

		return Tensor._from_op(np.array(self.data[index]), (self,), backward)

	# ==========================================================================
	# Reductions
	# ==========================================================================

	def sum(self, axis=None, keepdims=False):
		original = self.shape

		def backward(grad):
			if axis is not None and not keepdims:
				grad = np.expand_dims(grad, axis)
			return (np.broadcast_to(grad, original).copy(),)

		return Tensor._from_op(np.asarray(self.data.sum(axis=axis, keepdims=keepdims)), (self,), backward)

	def mean(self, axis=None, keepdims=False):
		count = self.data.size if axis is None else np.prod([self.shape[a] for a in np.atleast_1d(axis)])
		return self.sum(axis=axis, keepdims=keepdims) * (1.0 / float(count))


def _broadcast_op(op, a, b):
	try:
		return op(a.data, b.data)
	except ValueError as e:
		raise DimensionError(f"Shapes {a.shape} and {b.shape} are not broadcastable") from e


def _topological_order(root):
	"""Post-order of the graph above `root`, restricted to grad-requiring nodes."""
	order = []
	visited = set()
	stack = [(root, False)]
	while stack:
		node, expanded = stack.pop()
		if expanded:
			order.append(node)
			continue
		if id(node) in visited:
			continue
		visited.add(id(node))
		stack.append((node, True))
		for parent in node._parents:
			if parent.requires_grad and id(parent) not in visited:
				stack.append((parent, False))
	return order


def matmul(a, b):
	"""Matrix product over the last two axes, broadcasting batch axes.

	Args:
		a: Tensor [..., m, k]
		b: Tensor [..., k, n]

	Returns:
		Tensor [..., m, n]
	"""
	if a.ndim < 2 or b.ndim < 2:
		raise DimensionError(f"matmul needs rank >= 2 operands, got {a.shape} and {b.shape}")
	if a.shape[-1] != b.shape[-2]:
		raise DimensionError(f"matmul inner dimensions differ: {a.shape} x {b.shape}")
	try:
		np.broadcast_shapes(a.shape[:-2], b.shape[:-2])
	except ValueError as e:
		raise DimensionError(f"matmul batch dimensions differ: {a.shape} x {b.shape}") from e

	a_data, b_data = a.data, b.data

	def backward(grad):
		grad_a = np.matmul(grad, np.swapaxes(b_data, -1, -2))
		grad_b = np.matmul(np.swapaxes(a_data, -1, -2), grad)
		return _unbroadcast(grad_a, a_data.shape), _unbroadcast(grad_b, b_data.shape)

	return Tensor._from_op(np.matmul(a_data, b_data), (a, b), backward)

"""Identity bottleneck: learnable queries that compress a joint sequence into N_q identity tokens."""

from dataclasses import dataclass
from enum import Enum

from av_identity_guard.exceptions import DimensionError
from av_identity_guard.featpipe import FeatureSequence, StreamRole
from av_identity_guard.numcore import (
	FeedForward,
	LayerNorm,
	Module,
	MultiHeadAttention,
	Tensor,
	parameter,
	trunc_normal,
)


class TokenSource(str, Enum):
	TGT = "TGT"
	REF = "REF"
	REFINED = "REFINED"


@dataclass
class IdentityTokens:
	"""Identity tokens [..., N_q, D] and the path that produced them."""

	tokens: Tensor
	source: TokenSource

	@property
	def shape(self):
		return self.tokens.shape


class BottleneckBlock(Module):
	"""Self-attention over queries, cross-attention into the sequence, feed-forward.

	All three stages are pre-norm with the residual outside. The cross-attention
	norm is applied to both the queries and the sequence.
	"""

	def __init__(self, d, num_heads, ffn_mult, rng, dropout=0.0):
		self.ln_sa = LayerNorm(d)
		self.self_attn = MultiHeadAttention(d, num_heads, rng, dropout)
		self.ln_ca = LayerNorm(d)
		self.cross_attn = MultiHeadAttention(d, num_heads, rng, dropout)
		self.ln_ffn = LayerNorm(d)
		self.ffn = FeedForward(d, ffn_mult, rng, dropout)

	def forward(self, queries, features, return_weights=False):
		normed = self.ln_sa(queries)
		q = self.self_attn(normed, normed) + queries
		attended, weights = self.cross_attn(self.ln_ca(q), self.ln_ca(features), return_weights=True)
		q = attended + q
		q = self.ffn(self.ln_ffn(q)) + q
		return (q, weights) if return_weights else q


class IdentityBottleneck(Module):
	"""L bottleneck blocks over N_q learnable identity queries."""

	def __init__(self, d, n_queries, n_layers, num_heads, ffn_mult, rng, dropout=0.0, use_query_pos=True):
		self.q0 = parameter(trunc_normal(rng, (n_queries, d)))
		self.q_pos = parameter(trunc_normal(rng, (n_queries, d))) if use_query_pos else None
		self.blocks = [BottleneckBlock(d, num_heads, ffn_mult, rng, dropout) for _ in range(n_layers)]

	@property
	def n_queries(self):
		return self.q0.shape[0]

	def initial_queries(self):
		return self.q0 if self.q_pos is None else self.q0 + self.q_pos

	def forward(self, features, return_weights=False):
		"""Compress a feature sequence into identity tokens.

		Args:
			features: FeatureSequence (or a Tensor [..., L, D])
			return_weights: Also return the cross-attention weights of each block

		Returns:
			IdentityTokens [..., N_q, D]
		"""
		if isinstance(features, FeatureSequence):
			tokens = features.tokens
			source = TokenSource.REF if features.role is StreamRole.REF else TokenSource.TGT
		else:
			tokens, source = features, TokenSource.TGT

		d = self.q0.shape[1]
		if tokens.ndim < 2 or tokens.shape[-1] != d:
			raise DimensionError(f"Sequence {tokens.shape} does not match the bottleneck dimension {d}")

		queries = self.initial_queries().broadcast_to((*tokens.shape[:-2], self.n_queries, d))
		weights = []
		for block in self.blocks:
			queries, w = block(queries, tokens, return_weights=True)
			weights.append(w)

		out = IdentityTokens(tokens=queries, source=source)
		return (out, weights) if return_weights else out

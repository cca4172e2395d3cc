"""AV-Transformer: [CLS; refined identity tokens; target features] with type embeddings."""

from enum import IntEnum

import numpy as np

from av_identity_guard.exceptions import DimensionError
from av_identity_guard.numcore import (
	FeedForward,
	LayerNorm,
	Linear,
	Module,
	MultiHeadAttention,
	concat,
	embedding,
	parameter,
	trunc_normal,
)


class TokenType(IntEnum):
	CLS = 0
	ID_QUERY = 1
	AV_FEATURE = 2


class TransformerBlock(Module):
	"""Pre-norm self-attention and feed-forward, residuals outside."""

	def __init__(self, d, num_heads, ffn_mult, rng, dropout=0.0):
		self.ln_sa = LayerNorm(d)
		self.self_attn = MultiHeadAttention(d, num_heads, rng, dropout)
		self.ln_ffn = LayerNorm(d)
		self.ffn = FeedForward(d, ffn_mult, rng, dropout)

	def forward(self, x):
		normed = self.ln_sa(x)
		x = self.self_attn(normed, normed) + x
		return self.ffn(self.ln_ffn(x)) + x


class AvFormer(Module):
	def __init__(self, d, n_layers, num_heads, ffn_mult, rng, dropout=0.0, use_type_embeddings=True):
		self.cls_token = parameter(trunc_normal(rng, (d,)))
		self.type_embeddings = parameter(trunc_normal(rng, (len(TokenType), d))) if use_type_embeddings else None
		self.blocks = [TransformerBlock(d, num_heads, ffn_mult, rng, dropout) for _ in range(n_layers)]
		self.rf_head = Linear(d, 2, rng)

	@staticmethod
	def token_types(n_queries, n_features):
		"""Role of every position of the joint sequence; F_mod counts as an AV feature."""
		return np.array(
			[TokenType.CLS] + [TokenType.ID_QUERY] * n_queries + [TokenType.AV_FEATURE] * n_features,
			dtype=np.int64,
		)

	def assemble(self, refined, f_tgt):
		"""Build X = [CLS; refined; F] with type embeddings added, shape [..., 1+N_q+L, D]."""
		ids, feats = refined.tokens, f_tgt.tokens
		d = self.cls_token.shape[0]
		if ids.shape[-1] != d or feats.shape[-1] != d or ids.shape[:-2] != feats.shape[:-2]:
			raise DimensionError(f"Identity tokens {ids.shape} and features {feats.shape} do not line up (D={d})")

		cls = self.cls_token.reshape(1, d).broadcast_to((*ids.shape[:-2], 1, d))
		x = concat([cls, ids, feats], axis=-2)
		if self.type_embeddings is not None:
			x = x + embedding(self.type_embeddings, self.token_types(ids.shape[-2], feats.shape[-2]))
		return x

	def forward(self, refined, f_tgt):
		"""Run the joint sequence through the blocks and classify from [CLS].

		Returns:
			(rf_logits [..., 2], cls_out [..., D])
		"""
		x = self.assemble(refined, f_tgt)
		for block in self.blocks:
			x = block(x)
		cls_out = x[(slice(None),) * (x.ndim - 2) + (0, slice(None))]
		return self.rf_head(cls_out), cls_out

"""Identity matching: target identity tokens refined against reference tokens."""

from av_identity_guard.exceptions import DimensionError, ValidationError
from av_identity_guard.idb import IdentityTokens, TokenSource
from av_identity_guard.numcore import FeedForward, LayerNorm, Linear, Module, MultiHeadAttention, gelu, mean_pool


class MatchBlock(Module):
	"""Pre-norm cross-attention from target to reference, then an optional feed-forward."""

	def __init__(self, d, num_heads, ffn_mult, rng, dropout=0.0, use_ffn=True):
		self.ln_q = LayerNorm(d)
		self.ln_ref = LayerNorm(d)
		self.cross_attn = MultiHeadAttention(d, num_heads, rng, dropout)
		self.ln_ffn = LayerNorm(d) if use_ffn else None
		self.ffn = FeedForward(d, ffn_mult, rng, dropout) if use_ffn else None

	def forward(self, tgt, ref):
		x = self.cross_attn(self.ln_q(tgt), self.ln_ref(ref)) + tgt
		if self.ffn is not None:
			x = self.ffn(self.ln_ffn(x)) + x
		return x


class IdentityMatcher(Module):
	"""M match blocks plus the auxiliary identity-verification head (D -> D/2 -> 2)."""

	def __init__(self, d, n_layers, num_heads, ffn_mult, rng, dropout=0.0, use_ffn=True):
		self.blocks = [MatchBlock(d, num_heads, ffn_mult, rng, dropout, use_ffn) for _ in range(n_layers)]
		self.aux_fc1 = Linear(d, d // 2, rng)
		self.aux_fc2 = Linear(d // 2, 2, rng)

	def forward(self, tgt, ref):
		"""Refine target tokens by attending to reference tokens.

		Args:
			tgt: IdentityTokens [..., N_q, D]
			ref: IdentityTokens [..., N_q, D]

		Returns:
			IdentityTokens with source REFINED
		"""
		if tgt.tokens.shape != ref.tokens.shape:
			raise DimensionError(f"Target tokens {tgt.tokens.shape} and reference tokens {ref.tokens.shape} differ")
		x = tgt.tokens
		for block in self.blocks:
			x = block(x, ref.tokens)
		return IdentityTokens(tokens=x, source=TokenSource.REFINED)

	def id_logits(self, refined):
		"""Average-pool the refined tokens and map them to match/mismatch logits [..., 2]."""
		if refined.source is not TokenSource.REFINED:
			raise ValidationError(f"id_logits expects refined tokens, got {refined.source.value}")
		pooled = mean_pool(refined.tokens, axis=-2)
		return self.aux_fc2(gelu(self.aux_fc1(pooled)))


def passthrough(tgt):
	"""Stand-in for the matcher when the reference path is removed."""
	return IdentityTokens(tokens=tgt.tokens, source=TokenSource.REFINED)

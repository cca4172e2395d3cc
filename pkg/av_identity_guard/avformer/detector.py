"""The complete reference-aware detector and its construction from settings."""

from dataclasses import dataclass

import numpy as np

from av_identity_guard.avformer.model import AvFormer
from av_identity_guard.exceptions import ConfigError
from av_identity_guard.featpipe import FeatureAssembler, SegmentConfig, StreamRole
from av_identity_guard.idb import IdentityBottleneck, IdentityTokens, TokenSource
from av_identity_guard.matchnet import IdentityMatcher, passthrough
from av_identity_guard.numcore import Module, Tensor, parameter, softmax, trunc_normal

REFERENCE_MODES = ("full", "passthrough", "constant")


@dataclass
class DetectorOutput:
	rf_logits: Tensor
	id_logits: Tensor
	cls_out: Tensor
	refined: IdentityTokens

	def fake_probability(self):
		"""Softmax probabilities [..., 2] of the deepfake head as a plain array."""
		return softmax(self.rf_logits.detach(), axis=-1).data


class DetectorModel(Module):
	"""Feature assembly -> identity bottleneck -> matching -> AV-Transformer.

	reference_mode selects the reference path:
		full         reference tokens from the bottleneck, refined by the matcher
		passthrough  no matching blocks; target tokens go straight to the AV-Transformer
		constant     reference tokens replaced by a learned N_q x D constant
	"""

	def __init__(self, settings, rng):
		if settings.reference_mode not in REFERENCE_MODES:
			raise ConfigError(f"Unknown reference_mode {settings.reference_mode!r}")
		d = settings.d_model
		self.geometry = SegmentConfig.from_settings(settings)
		self._mode = settings.reference_mode
		self._settings = settings

		self.assembler = FeatureAssembler(self.geometry, settings.d_raw, d, rng, settings.use_positional)
		self.idb = self._bottleneck(rng)
		self.ref_idb = self._bottleneck(rng) if not settings.share_idb and self._mode == "full" else None
		self.ref_const = (
			parameter(trunc_normal(rng, (settings.n_queries, d))) if self._mode == "constant" else None
		)
		self.matcher = IdentityMatcher(
			d,
			settings.match_layers if self._mode != "passthrough" else 0,
			settings.num_heads,
			settings.ffn_mult,
			rng,
			settings.dropout,
			settings.match_ffn,
		)
		self.avformer = AvFormer(
			d, settings.av_layers, settings.num_heads, settings.ffn_mult, rng, settings.dropout,
			settings.use_type_embeddings,
		)

	def _bottleneck(self, rng):
		s = self._settings
		return IdentityBottleneck(
			s.d_model, s.n_queries, s.idb_layers, s.num_heads, s.ffn_mult, rng, s.dropout, s.use_query_pos
		)

	@property
	def reference_mode(self):
		return self._mode

	def reference_tokens(self, reference_visual, reference_audio, batch_shape):
		if self._mode == "constant":
			shape = (*batch_shape, *self.ref_const.shape)
			return IdentityTokens(tokens=self.ref_const.broadcast_to(shape), source=TokenSource.REF)
		f_ref = self.assembler(reference_visual, reference_audio, StreamRole.REF)
		return (self.ref_idb or self.idb)(f_ref)

	def forward(self, target_visual, target_audio, reference_visual=None, reference_audio=None):
		"""Score target windows against reference windows.

		Args:
			target_visual: [..., n_seg*T_v, d_raw]
			target_audio: [..., n_seg*T_a, d_raw]
			reference_visual: [..., n_seg*T_v, d_raw]; unused in passthrough/constant mode
			reference_audio: [..., n_seg*T_a, d_raw]

		Returns:
			DetectorOutput
		"""
		f_tgt = self.assembler(target_visual, target_audio, StreamRole.TGT)
		t_tgt = self.idb(f_tgt)

		if self._mode == "passthrough":
			refined = passthrough(t_tgt)
		else:
			t_ref = self.reference_tokens(reference_visual, reference_audio, f_tgt.tokens.shape[:-2])
			refined = self.matcher(t_tgt, t_ref)

		rf_logits, cls_out = self.avformer(refined, f_tgt)
		return DetectorOutput(rf_logits, self.matcher.id_logits(refined), cls_out, refined)


def check_geometry(model_settings, geometry, d_raw):
	"""Raise ConfigError if the model cannot consume windows cut with `geometry`."""
	model_geometry = SegmentConfig.from_settings(model_settings)
	if not model_geometry.same_geometry(geometry):
		raise ConfigError(
			f"Model geometry {model_geometry.to_dict()} does not match dataset geometry {geometry.to_dict()}"
		)
	if model_settings.d_raw != d_raw:
		raise ConfigError(f"Model d_raw {model_settings.d_raw} does not match dataset tokens of size {d_raw}")


def build_model(settings, seed=0):
	"""Instantiate a DetectorModel with parameters named for checkpoints and error messages."""
	model = DetectorModel(settings, np.random.default_rng([seed, 3]))
	return model.name_parameters()

"""Joint audiovisual sequence assembly: [visual; F_mod; audio]."""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from av_identity_guard.exceptions import DimensionError
from av_identity_guard.numcore import Linear, Module, Tensor, concat, parameter, trunc_normal


class StreamRole(str, Enum):
	TGT = "TGT"
	REF = "REF"


@dataclass(frozen=True)
class SequenceLayout:
	"""Index ranges of the two modality spans and the separator slot."""

	visual: tuple
	mod: int
	audio: tuple

	@classmethod
	def for_counts(cls, n_visual, n_audio):
		return cls(visual=(0, n_visual), mod=n_visual, audio=(n_visual + 1, n_visual + 1 + n_audio))

	@property
	def length(self):
		return self.audio[1]

	def validate(self):
		spans = [self.visual, (self.mod, self.mod + 1), self.audio]
		if spans[0][0] != 0 or any(a[1] != b[0] for a, b in zip(spans, spans[1:])):
			raise DimensionError(f"Layout spans are not contiguous: {spans}")
		return self


@dataclass
class FeatureSequence:
	"""Assembled tokens [..., L, D] with their layout and role."""

	tokens: Tensor
	layout: SequenceLayout
	role: StreamRole

	@property
	def length(self):
		return self.tokens.shape[-2]


def _as_tensor(x):
	return x if isinstance(x, Tensor) else Tensor(x)


class FeatureAssembler(Module):
	"""Projects raw tokens to the model dimension and lays out the joint sequence.

	The same parameters serve the target and the reference clip.
	"""

	def __init__(self, cfg, d_raw, d_model, rng, use_positional=True):
		self.visual_proj = Linear(d_raw, d_model, rng)
		self.audio_proj = Linear(d_raw, d_model, rng)
		self.visual_pos = parameter(trunc_normal(rng, (cfg.visual_tokens, d_model))) if use_positional else None
		self.audio_pos = parameter(trunc_normal(rng, (cfg.audio_tokens, d_model))) if use_positional else None
		self.f_mod = parameter(trunc_normal(rng, (d_model,)))
		self._cfg = cfg
		self._d_raw = d_raw
		self._layout = SequenceLayout.for_counts(cfg.visual_tokens, cfg.audio_tokens).validate()

	@property
	def layout(self):
		return self._layout

	def forward(self, visual_raw, audio_raw, role=StreamRole.TGT):
		"""Assemble one (or a batch of) raw token windows.

		Args:
			visual_raw: [..., n_seg*T_v, d_raw]
			audio_raw: [..., n_seg*T_a, d_raw]
			role: StreamRole of the clip

		Returns:
			FeatureSequence with tokens [..., n_seg*(T_v+T_a)+1, D]
		"""
		visual_raw, audio_raw = _as_tensor(visual_raw), _as_tensor(audio_raw)
		expected_v = (self._cfg.visual_tokens, self._d_raw)
		expected_a = (self._cfg.audio_tokens, self._d_raw)
		if visual_raw.shape[-2:] != expected_v or audio_raw.shape[-2:] != expected_a:
			raise DimensionError(
				f"Raw tokens {visual_raw.shape}/{audio_raw.shape} do not match the segment "
				f"config {expected_v}/{expected_a}"
			)
		if visual_raw.shape[:-2] != audio_raw.shape[:-2]:
			raise DimensionError(f"Batch shapes differ: {visual_raw.shape} vs {audio_raw.shape}")

		visual = self.visual_proj(visual_raw)
		audio = self.audio_proj(audio_raw)
		if self.visual_pos is not None:
			visual = visual + self.visual_pos
			audio = audio + self.audio_pos

		batch = visual_raw.shape[:-2]
		d = self.f_mod.shape[0]
		separator = self.f_mod.reshape(1, d).broadcast_to((*batch, 1, d))
		tokens = concat([visual, separator, audio], axis=-2)
		return FeatureSequence(tokens=tokens, layout=self._layout, role=StreamRole(role))


def stack_windows(windows):
	"""Stack equally shaped arrays into one batch array."""
	return np.stack([np.asarray(w) for w in windows])

"""The frozen identity world and clip rendering.

A clip is rendered segment by segment. Token j of segment i sits at time
position u = i * stride / duration + j / T (in segment durations), and

	visual = s_id * P_v z_v + s_c * W_v c(u) + noise
	audio  = s_id * P_a z_a + s_c * W_a c(u + shift * stride / duration) + noise

where c is a sum of random-phase sinusoids drawn from the clip's content
seed, so both modalities follow the same content timeline unless shifted.

DESYNC and ARTIFACT clips are whole-clip generator outputs: both streams
carry the claimed latent rotated by `identity_drift_deg` toward a direction
drawn from the content seed, so their identity agrees across modalities but
not with the claimed speaker's real recordings.
"""

from dataclasses import dataclass

import numpy as np

from av_identity_guard.numcore import checkpoint
from av_identity_guard.synthworld.types import Manipulation, Speaker

_META_KEYS = (
	"noise_std",
	"identity_scale",
	"content_scale",
	"artifact_amplitude",
	"artifact_period",
	"identity_drift_deg",
	"n_sinusoids",
	"t_v",
	"t_a",
	"seg_duration_s",
	"seg_stride_s",
)
_INT_META = {"artifact_period", "n_sinusoids", "t_v", "t_a"}


@dataclass
class World:
	"""Projections, speakers and constants shared by every clip of a dataset."""

	p_v: np.ndarray
	p_a: np.ndarray
	w_v: np.ndarray
	w_a: np.ndarray
	artifact: np.ndarray
	speaker_latents: np.ndarray
	noise_std: float
	identity_scale: float
	content_scale: float
	artifact_amplitude: float
	artifact_period: int
	identity_drift_deg: float
	n_sinusoids: int
	t_v: int
	t_a: int
	seg_duration_s: float
	seg_stride_s: float

	@classmethod
	def create(cls, settings, seg_stride_s):
		"""Draw fresh world parameters from `settings.seed`.

		Args:
			settings: DatasetSettings
			seg_stride_s: Seconds between consecutive segment starts
		"""
		rng = np.random.default_rng([settings.seed, 1])
		d_raw, d_id, d_c = settings.d_raw, settings.d_id, settings.d_content
		latents = rng.normal(size=(settings.n_speakers, d_id))
		latents /= np.linalg.norm(latents, axis=1, keepdims=True)
		return cls(
			p_v=rng.normal(size=(d_raw, d_id)),
			p_a=rng.normal(size=(d_raw, d_id)),
			w_v=rng.normal(scale=1.0 / np.sqrt(d_c), size=(d_raw, d_c)),
			w_a=rng.normal(scale=1.0 / np.sqrt(d_c), size=(d_raw, d_c)),
			artifact=rng.choice([-1.0, 1.0], size=d_raw),
			speaker_latents=latents,
			noise_std=settings.noise_std,
			identity_scale=settings.identity_scale,
			content_scale=settings.content_scale,
			artifact_amplitude=settings.artifact_amplitude,
			artifact_period=settings.artifact_period,
			identity_drift_deg=settings.identity_drift_deg,
			n_sinusoids=settings.n_sinusoids,
			t_v=settings.t_v,
			t_a=settings.t_a,
			seg_duration_s=settings.seg_duration_s,
			seg_stride_s=seg_stride_s,
		)

	@property
	def d_raw(self):
		return self.p_v.shape[0]

	@property
	def d_content(self):
		return self.w_v.shape[1]

	def speaker(self, speaker_id):
		return Speaker(id=speaker_id, z=self.speaker_latents[speaker_id])

	def drifted_latent(self, z, seed):
		"""Unit latent at `identity_drift_deg` from unit `z`, toward a direction drawn from `seed`."""
		direction = np.random.default_rng([seed, 11]).normal(size=z.shape)
		direction -= (direction @ z) * z
		direction /= np.linalg.norm(direction)
		angle = np.deg2rad(self.identity_drift_deg)
		return np.cos(angle) * z + np.sin(angle) * direction

	# ==========================================================================
	# Serialization
	# ==========================================================================

	def to_tensors(self):
		tensors = {
			"p_v": self.p_v,
			"p_a": self.p_a,
			"w_v": self.w_v,
			"w_a": self.w_a,
			"artifact": self.artifact,
			"speaker_latents": self.speaker_latents,
		}
		for key in _META_KEYS:
			tensors[f"meta.{key}"] = np.asarray(getattr(self, key))
		return tensors

	@classmethod
	def from_tensors(cls, tensors):
		kwargs = {name: tensors[name].astype(np.float64) for name in ("p_v", "p_a", "w_v", "w_a", "artifact")}
		kwargs["speaker_latents"] = tensors["speaker_latents"].astype(np.float64)
		for key in _META_KEYS:
			value = tensors[f"meta.{key}"].item()
			kwargs[key] = int(round(value)) if key in _INT_META else float(value)
		return cls(**kwargs)

	def save(self, path):
		checkpoint.save(path, self.to_tensors())

	@classmethod
	def load(cls, path):
		return cls.from_tensors(checkpoint.load(path))

	# ==========================================================================
	# Rendering
	# ==========================================================================

	def content(self, content_seed, positions):
		"""Content latent c(u) for each time position, shape [len(positions), d_content]."""
		rng = np.random.default_rng(content_seed)
		freqs = rng.uniform(0.5, 2.0, size=self.n_sinusoids)
		phases = rng.uniform(0.0, 2.0 * np.pi, size=(self.n_sinusoids, self.d_content))
		amplitude = np.sqrt(2.0 / self.n_sinusoids)
		angles = freqs[None, :, None] * np.asarray(positions)[:, None, None] + phases[None]
		return amplitude * np.sin(angles).sum(axis=1)

	def positions(self, n_segments, tokens_per_segment):
		"""Time position of every token of a segmented stream, in segment durations."""
		step = self.seg_stride_s / self.seg_duration_s
		seg = np.repeat(np.arange(n_segments), tokens_per_segment)
		tok = np.tile(np.arange(tokens_per_segment), n_segments)
		return seg * step + tok / tokens_per_segment

	def render_clip(self, spec, rng_seed=None):
		"""Render a clip into segmented token streams.

		Args:
			spec: ClipSpec
			rng_seed: Noise seed; defaults to `spec.render_seed`

		Returns:
			(visual [K*T_v, d_raw], audio [K*T_a, d_raw]) float32, K = spec.duration_segments
		"""
		spec.validate()
		noise = np.random.default_rng(spec.render_seed if rng_seed is None else rng_seed)
		k = spec.duration_segments

		pos_v = self.positions(k, self.t_v)
		pos_a = self.positions(k, self.t_a) + spec.desync_shift * self.seg_stride_s / self.seg_duration_s
		z_v = self.speaker(spec.speaker_v).z
		z_a = self.speaker(spec.speaker_a).z
		if spec.manipulation.is_generated:
			z_v = z_a = self.drifted_latent(z_v, spec.content_seed)

		visual = (
			self.identity_scale * (self.p_v @ z_v)[None, :]
			+ self.content_scale * self.content(spec.content_seed, pos_v) @ self.w_v.T
			+ self.noise_std * noise.normal(size=(len(pos_v), self.d_raw))
		)
		audio = (
			self.identity_scale * (self.p_a @ z_a)[None, :]
			+ self.content_scale * self.content(spec.content_seed, pos_a) @ self.w_a.T
			+ self.noise_std * noise.normal(size=(len(pos_a), self.d_raw))
		)

		if spec.manipulation is Manipulation.ARTIFACT:
			visual[:: self.artifact_period] += self.artifact_amplitude * self.artifact

		return visual.astype(np.float32), audio.astype(np.float32)

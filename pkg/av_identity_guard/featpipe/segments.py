"""Segment geometry: how a window is cut into overlapping segments."""

from dataclasses import asdict, dataclass

from av_identity_guard.exceptions import ConfigError, DatasetError, DimensionError

GEOMETRY_TOLERANCE = 1e-9


@dataclass(frozen=True)
class SegmentConfig:
	"""Segments per window, their duration and token counts.

	The stride between segment starts follows from the window length, so
	seg_duration_s + (n_seg - 1) * seg_stride_s equals window_s.
	"""

	n_seg: int = 8
	seg_duration_s: float = 0.64
	window_s: float = 2.88
	t_v: int = 4
	t_a: int = 6
	d: int = None

	@classmethod
	def from_settings(cls, settings):
		"""Build from any settings object carrying the geometry fields."""
		return cls(
			n_seg=settings.n_seg,
			seg_duration_s=settings.seg_duration_s,
			window_s=settings.window_s,
			t_v=settings.t_v,
			t_a=settings.t_a,
			d=getattr(settings, "d_model", None),
		)

	@classmethod
	def from_dict(cls, data):
		return cls(**{name: data.get(name) for name in cls.__dataclass_fields__})

	def to_dict(self):
		data = asdict(self)
		data["seg_stride_s"] = self.seg_stride_s
		return data

	@property
	def seg_stride_s(self):
		return segment_stride(self)

	@property
	def visual_tokens(self):
		return self.n_seg * self.t_v

	@property
	def audio_tokens(self):
		return self.n_seg * self.t_a

	@property
	def sequence_length(self):
		return self.visual_tokens + 1 + self.audio_tokens

	def same_geometry(self, other):
		"""True when both configs cut windows identically (model size ignored)."""
		return (
			self.n_seg == other.n_seg
			and self.t_v == other.t_v
			and self.t_a == other.t_a
			and abs(self.seg_duration_s - other.seg_duration_s) <= GEOMETRY_TOLERANCE
			and abs(self.window_s - other.window_s) <= GEOMETRY_TOLERANCE
		)

	# ==========================================================================
	# Clip <-> window mapping
	# ==========================================================================

	def clip_duration(self, n_segments):
		"""Seconds spanned by a clip of `n_segments` consecutive segments."""
		return self.seg_duration_s + (n_segments - 1) * self.seg_stride_s

	def segment_index(self, start_s, n_segments):
		"""First segment of the window starting at `start_s`, clamped to the clip."""
		last = n_segments - self.n_seg
		if last < 0:
			raise DatasetError(f"Clip of {n_segments} segments is shorter than one window ({self.n_seg})")
		return min(max(int(round(start_s / self.seg_stride_s)), 0), last)

	def crop(self, visual, audio, first_segment):
		"""Token spans of the window that starts at `first_segment`.

		Args:
			visual: array [K*T_v, d_raw]
			audio: array [K*T_a, d_raw]
			first_segment: Index of the window's first segment

		Returns:
			(visual [n_seg*T_v, d_raw], audio [n_seg*T_a, d_raw])
		"""
		n_segments = self.segments_in(visual, audio)
		if not 0 <= first_segment <= n_segments - self.n_seg:
			raise DimensionError(
				f"Window at segment {first_segment} does not fit a clip of {n_segments} segments"
			)
		v0, a0 = first_segment * self.t_v, first_segment * self.t_a
		return visual[v0 : v0 + self.visual_tokens], audio[a0 : a0 + self.audio_tokens]

	def random_crop(self, visual, audio, rng):
		n_segments = self.segments_in(visual, audio)
		first = int(rng.integers(0, n_segments - self.n_seg + 1))
		return self.crop(visual, audio, first)

	def segments_in(self, visual, audio):
		"""Segment count of a rendered clip, checking both modalities agree."""
		n_v, rem_v = divmod(len(visual), self.t_v)
		n_a, rem_a = divmod(len(audio), self.t_a)
		if rem_v or rem_a or n_v != n_a:
			raise DimensionError(
				f"Token counts {len(visual)}/{len(audio)} do not split into whole segments "
				f"of {self.t_v}/{self.t_a} tokens"
			)
		return n_v


def segment_stride(cfg):
	"""Seconds between consecutive segment starts inside one window.

	Args:
		cfg: SegmentConfig

	Returns:
		(window_s - seg_duration_s) / (n_seg - 1)
	"""
	if cfg.n_seg < 2:
		raise ConfigError(f"A window needs at least two segments, got n_seg={cfg.n_seg}")
	stride = (cfg.window_s - cfg.seg_duration_s) / (cfg.n_seg - 1)
	if stride <= GEOMETRY_TOLERANCE:
		raise ConfigError(
			f"Degenerate geometry: window {cfg.window_s}s and segment {cfg.seg_duration_s}s give stride {stride}"
		)
	return stride

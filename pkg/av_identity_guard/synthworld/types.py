"""Record types of the synthetic identity world."""

from dataclasses import asdict, dataclass, field
from enum import Enum

import numpy as np

from av_identity_guard.exceptions import DatasetError


class Manipulation(str, Enum):
	REAL = "REAL"
	VISUAL_SWAP = "VISUAL_SWAP"
	AUDIO_SWAP = "AUDIO_SWAP"
	BOTH_SWAP = "BOTH_SWAP"
	DESYNC = "DESYNC"
	ARTIFACT = "ARTIFACT"

	@property
	def is_fake(self):
		return self is not Manipulation.REAL

	@property
	def is_generated(self):
		"""Whole-clip generator output whose identity drifts in both streams."""
		return self in (Manipulation.DESYNC, Manipulation.ARTIFACT)


class Split(str, Enum):
	TRAIN = "TRAIN"
	VAL = "VAL"
	TEST_IN = "TEST_IN"
	TEST_UNSEEN = "TEST_UNSEEN"

	@classmethod
	def parse(cls, text):
		"""Accept `test_unseen`, `TEST_UNSEEN` or a Split."""
		if isinstance(text, cls):
			return text
		try:
			return cls[str(text).strip().upper()]
		except KeyError:
			raise DatasetError(f"Unknown split {text!r}; expected one of {[s.value for s in cls]}") from None


class Role(str, Enum):
	TARGET = "target"
	REFERENCE = "reference"


class Pool(str, Enum):
	"""Which reference pool a REAL clip belongs to; the pools never share a recording."""

	TRAIN = "train"
	EVAL = "eval"


@dataclass(frozen=True, eq=False)
class Speaker:
	id: int
	z: np.ndarray


@dataclass(frozen=True)
class ClipSpec:
	"""Everything needed to render one clip deterministically."""

	clip_id: int
	claimed_id: int
	speaker_v: int
	speaker_a: int
	content_seed: int
	render_seed: int
	manipulation: Manipulation
	duration_segments: int
	desync_shift: int = 0

	def validate(self):
		"""Check that the manipulation tag implies its inconsistency and no other."""
		m = self.manipulation
		v_swapped = self.speaker_v != self.claimed_id
		a_swapped = self.speaker_a != self.claimed_id
		shifted = self.desync_shift != 0
		expected = {
			Manipulation.REAL: (False, False, False),
			Manipulation.VISUAL_SWAP: (True, False, False),
			Manipulation.AUDIO_SWAP: (False, True, False),
			Manipulation.BOTH_SWAP: (True, True, False),
			Manipulation.DESYNC: (False, False, True),
			Manipulation.ARTIFACT: (False, False, False),
		}[m]
		if (v_swapped, a_swapped, shifted) != expected:
			raise DatasetError(f"Clip {self.clip_id}: {m.value} is inconsistent with its speakers/shift")
		if m is Manipulation.BOTH_SWAP and self.speaker_v != self.speaker_a:
			raise DatasetError(f"Clip {self.clip_id}: BOTH_SWAP shows one impostor in both streams")
		if self.duration_segments < 1:
			raise DatasetError(f"Clip {self.clip_id}: duration must be positive")
		return self

	def to_dict(self):
		data = asdict(self)
		data["manipulation"] = self.manipulation.value
		return data

	@classmethod
	def from_dict(cls, data):
		fields = {name: data[name] for name in cls.__dataclass_fields__}
		fields["manipulation"] = Manipulation(fields["manipulation"])
		return cls(**fields)


@dataclass(frozen=True)
class ClipRecord:
	"""One manifest line: a clip spec with its role, split and labels."""

	spec: ClipSpec
	role: Role
	split: Split = None
	pool: Pool = None
	reference_id: int = None

	@property
	def clip_id(self):
		return self.spec.clip_id

	@property
	def is_real(self):
		return self.spec.manipulation is Manipulation.REAL

	@property
	def y_fake(self):
		return int(self.spec.manipulation.is_fake)

	def to_dict(self):
		return {
			"kind": "clip",
			**self.spec.to_dict(),
			"role": self.role.value,
			"split": self.split.value if self.split else None,
			"pool": self.pool.value if self.pool else None,
			"reference_id": self.reference_id,
			"y_fake": self.y_fake,
		}

	@classmethod
	def from_dict(cls, data):
		return cls(
			spec=ClipSpec.from_dict(data),
			role=Role(data["role"]),
			split=Split(data["split"]) if data.get("split") else None,
			pool=Pool(data["pool"]) if data.get("pool") else None,
			reference_id=data.get("reference_id"),
		)


def identity_match_label(target, reference):
	"""1 iff the target is REAL, shows the reference's speaker, and is another recording."""
	same_speaker = target.speaker_v == target.speaker_a == reference.speaker_v == reference.speaker_a
	distinct = target.clip_id != reference.clip_id
	return int(target.manipulation is Manipulation.REAL and same_speaker and distinct)


@dataclass
class PairRecord:
	"""A target clip, its reference clip, both rendered, and the two labels."""

	target: ClipSpec
	reference: ClipSpec
	target_visual: np.ndarray = field(repr=False)
	target_audio: np.ndarray = field(repr=False)
	reference_visual: np.ndarray = field(repr=False)
	reference_audio: np.ndarray = field(repr=False)
	split: Split = Split.TRAIN

	def __post_init__(self):
		if self.reference.manipulation is not Manipulation.REAL:
			raise DatasetError(f"Reference clip {self.reference.clip_id} is not REAL")
		if self.reference.clip_id == self.target.clip_id:
			raise DatasetError(f"Clip {self.target.clip_id} cannot reference itself")

	@property
	def y_fake(self):
		return int(self.target.manipulation.is_fake)

	@property
	def y_id_match(self):
		return identity_match_label(self.target, self.reference)

	@property
	def manipulation(self):
		return self.target.manipulation

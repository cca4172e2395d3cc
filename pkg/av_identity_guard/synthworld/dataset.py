"""Dataset generation, serialization and loading.

A dataset directory holds:
	dataset.jsonl  manifest: one meta line, then one line per clip
	dataset.bin    rendered token streams keyed clip/<id>/visual|audio
	world.bin      frozen world parameters
"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from tqdm import tqdm

from av_identity_guard.common.utils import log_error
from av_identity_guard.exceptions import ConfigError, DatasetError
from av_identity_guard.featpipe.segments import SegmentConfig, segment_stride
from av_identity_guard.numcore import checkpoint
from av_identity_guard.synthworld.types import (
	ClipRecord,
	ClipSpec,
	Manipulation,
	PairRecord,
	Pool,
	Role,
	Split,
)
from av_identity_guard.synthworld.world import World

logger = logging.getLogger(__name__)

MANIFEST = "dataset.jsonl"
TENSORS = "dataset.bin"
WORLD = "world.bin"

# Recorded in the manifest: training draws real and fake targets with equal probability.
SAMPLING_POLICY = {"kind": "class_balanced", "weights": {"real": 0.5, "fake": 0.5}}


def _pick(rng, mixture):
	"""Draw a key of {key: probability} using a fixed key order."""
	keys = [k for k, p in mixture.items() if p > 0]
	probs = np.array([mixture[k] for k in keys], dtype=np.float64)
	return keys[rng.choice(len(keys), p=probs / probs.sum())]


def _impostor(rng, candidates, exclude):
	pool = [s for s in candidates if s not in exclude]
	if not pool:
		raise ConfigError("Not enough speakers to draw an impostor")
	return int(pool[rng.integers(len(pool))])


class _SpecFactory:
	"""Allocates clip ids and seeds, and builds specs for each manipulation."""

	def __init__(self, settings, rng):
		self.settings = settings
		self.rng = rng
		self.next_id = 0
		self.content_base = int(rng.integers(1, 2**30))
		self.render_base = int(rng.integers(1, 2**30))

	def build(self, claimed, manipulation, impostors):
		s, rng = self.settings, self.rng
		speaker_v = speaker_a = claimed
		shift = 0
		if manipulation is Manipulation.VISUAL_SWAP:
			speaker_v = _impostor(rng, impostors, {claimed})
		elif manipulation is Manipulation.AUDIO_SWAP:
			speaker_a = _impostor(rng, impostors, {claimed})
		elif manipulation is Manipulation.BOTH_SWAP:
			speaker_v = speaker_a = _impostor(rng, impostors, {claimed})
		if manipulation is Manipulation.DESYNC:
			shift = int(s.desync_shifts[rng.integers(len(s.desync_shifts))])

		clip_id = self.next_id
		self.next_id += 1
		return ClipSpec(
			clip_id=clip_id,
			claimed_id=claimed,
			speaker_v=speaker_v,
			speaker_a=speaker_a,
			content_seed=self.content_base + clip_id,
			render_seed=self.render_base + clip_id,
			manipulation=manipulation,
			duration_segments=int(rng.integers(s.min_segments, s.max_segments + 1)),
			desync_shift=shift,
		).validate()


def build_manifest(settings):
	"""Lay out every clip of the dataset without rendering.

	Args:
		settings: DatasetSettings

	Returns:
		list of ClipRecord in manifest order
	"""
	rng = np.random.default_rng([settings.seed, 2])
	factory = _SpecFactory(settings, rng)
	mixture = settings.mixture()
	held_out = settings.held_out_set()
	splits = settings.split_mixture()
	n_seen = settings.n_speakers - settings.held_out_speakers
	seen_speakers = list(range(n_seen))
	all_speakers = list(range(settings.n_speakers))
	every = settings.unseen_real_every

	records = []
	for speaker in all_speakers:
		seen = speaker < n_seen
		n_train_refs = settings.train_references if seen else 0
		n_targets = settings.clips_per_speaker - n_train_refs - settings.eval_references
		if n_targets < 0:
			raise ConfigError(
				f"clips_per_speaker ({settings.clips_per_speaker}) cannot hold "
				f"{n_train_refs + settings.eval_references} reference clips"
			)

		for _ in range(n_train_refs):
			spec = factory.build(speaker, Manipulation.REAL, seen_speakers)
			records.append(ClipRecord(spec, Role.REFERENCE, split=Split.TRAIN, pool=Pool.TRAIN))

		eval_pool = []
		for _ in range(settings.eval_references):
			spec = factory.build(speaker, Manipulation.REAL, all_speakers)
			eval_pool.append(spec.clip_id)
			records.append(ClipRecord(spec, Role.REFERENCE, pool=Pool.EVAL))

		n_real = 0
		for _ in range(n_targets):
			manipulation = _pick(rng, mixture)
			if not seen or manipulation in held_out:
				split = Split.TEST_UNSEEN
			elif manipulation is Manipulation.REAL and every and n_real % every == 0:
				# Seen-speaker negatives for the held-out manipulations.
				split = Split.TEST_UNSEEN
			else:
				split = _pick(rng, splits)
			if seen and manipulation is Manipulation.REAL:
				n_real += 1

			# Impostors for seen splits come from seen speakers only.
			impostors = all_speakers if split is Split.TEST_UNSEEN else seen_speakers
			spec = factory.build(speaker, manipulation, impostors)
			pool = Pool.TRAIN if split is Split.TRAIN and spec.manipulation is Manipulation.REAL else None
			reference_id = None
			if split is not Split.TRAIN:
				reference_id = int(eval_pool[rng.integers(len(eval_pool))])
			records.append(ClipRecord(spec, Role.TARGET, split=split, pool=pool, reference_id=reference_id))

	_check_unseen_classes(records)
	return records


def _check_unseen_classes(records):
	labels = {r.y_fake for r in records if r.role is Role.TARGET and r.split is Split.TEST_UNSEEN}
	if len(labels) == 1:
		kind = "fake" if labels == {1} else "real"
		raise ConfigError(
			f"TEST_UNSEEN would hold only {kind} targets; adjust held_out_speakers, unseen_real_every or the mix"
		)


def generate_dataset(settings, out_dir, progress=True):
	"""Render a complete dataset into `out_dir`.

	Args:
		settings: DatasetSettings
		out_dir: Directory to create or overwrite
		progress: Show a progress bar

	Returns:
		Dataset
	"""
	geometry = SegmentConfig.from_settings(settings)
	world = World.create(settings, segment_stride(geometry))
	# Round-trip through the container so in-memory renders match world.bin exactly.
	world = World.from_tensors(checkpoint.loads(checkpoint.dumps(world.to_tensors())))

	records = build_manifest(settings)
	tokens = {}
	for record in tqdm(records, desc="Rendering clips", disable=not progress):
		visual, audio = world.render_clip(record.spec)
		tokens[f"clip/{record.clip_id}/visual"] = visual
		tokens[f"clip/{record.clip_id}/audio"] = audio

	meta = {
		"kind": "meta",
		"seed": settings.seed,
		"n_speakers": settings.n_speakers,
		"held_out_speakers": list(range(settings.n_speakers - settings.held_out_speakers, settings.n_speakers)),
		"held_out_manipulations": sorted(m.value for m in settings.held_out_set()),
		"geometry": geometry.to_dict(),
		"sampling_policy": SAMPLING_POLICY,
		"settings": settings.as_dict(),
	}
	dataset = Dataset(meta, records, tokens, world)
	dataset.validate()
	dataset.save(out_dir)
	logger.info("Wrote %d clips for %d speakers to %s", len(records), settings.n_speakers, out_dir)
	return dataset


@dataclass
class Dataset:
	"""Manifest, token streams and world of one generated dataset."""

	meta: dict
	records: list
	tokens: dict
	world: World = None

	def __post_init__(self):
		self._by_id = {record.clip_id: record for record in self.records}

	# ==========================================================================
	# Files
	# ==========================================================================

	def save(self, out_dir):
		out = Path(out_dir)
		out.mkdir(parents=True, exist_ok=True)
		with open(out / MANIFEST, "w", encoding="utf-8", newline="\n") as f:
			f.write(json.dumps(self.meta, sort_keys=True) + "\n")
			for record in self.records:
				f.write(json.dumps(record.to_dict(), sort_keys=True) + "\n")
		checkpoint.save(out / TENSORS, self.tokens)
		if self.world is not None:
			self.world.save(out / WORLD)

	@classmethod
	def load(cls, directory):
		directory = Path(directory)
		manifest = directory / MANIFEST
		if not manifest.exists():
			raise DatasetError(f"No {MANIFEST} in {directory}")

		meta, records = None, []
		with open(manifest, encoding="utf-8") as f:
			for line_no, line in enumerate(f, start=1):
				if not line.strip():
					continue
				try:
					data = json.loads(line)
				except json.JSONDecodeError as e:
					log_error("dataset", f"{manifest}:{line_no}: {e}", "Manifest Parse Error")
					raise DatasetError(f"Invalid JSON on line {line_no} of {manifest}") from e
				if data.get("kind") == "meta":
					meta = data
				else:
					records.append(ClipRecord.from_dict(data))
		if meta is None:
			raise DatasetError(f"{manifest} has no meta line")

		world = World.load(directory / WORLD) if (directory / WORLD).exists() else None
		dataset = cls(meta, records, checkpoint.load(directory / TENSORS), world)
		dataset.validate()
		return dataset

	# ==========================================================================
	# Lookups
	# ==========================================================================

	@property
	def geometry(self):
		return SegmentConfig.from_dict(self.meta["geometry"])

	def record(self, clip_id):
		try:
			return self._by_id[clip_id]
		except KeyError:
			raise DatasetError(f"Unknown clip id {clip_id}") from None

	def clip_tokens(self, clip_id):
		"""(visual, audio) token streams of a clip."""
		try:
			return self.tokens[f"clip/{clip_id}/visual"], self.tokens[f"clip/{clip_id}/audio"]
		except KeyError:
			raise DatasetError(f"No rendered tokens for clip {clip_id}") from None

	def targets(self, split):
		split = Split.parse(split)
		return [r for r in self.records if r.role is Role.TARGET and r.split is split]

	def splits(self):
		return sorted({r.split for r in self.records if r.role is Role.TARGET}, key=list(Split).index)

	def reference_pool(self, speaker, pool):
		return [r for r in self.records if r.pool is pool and r.spec.claimed_id == speaker]

	def make_pair(self, target, reference, split):
		tv, ta = self.clip_tokens(target.clip_id)
		rv, ra = self.clip_tokens(reference.clip_id)
		return PairRecord(target.spec, reference.spec, tv, ta, rv, ra, split=split)

	def eval_pairs(self, split):
		"""The manifest's predefined target/reference pairs of a split, in order."""
		split = Split.parse(split)
		if split is Split.TRAIN:
			raise DatasetError("TRAIN has no predefined pairs; use the training sampler")
		targets = self.targets(split)
		if not targets:
			available = [s.value for s in self.splits()]
			raise DatasetError(f"Split {split.value} is empty or missing; the dataset has {available}")
		return [self.make_pair(t, self.record(t.reference_id), split) for t in targets]

	# ==========================================================================
	# Invariants
	# ==========================================================================

	def validate(self):
		"""Check the dataset invariants, raising DatasetError on the first failure."""
		geometry = self.geometry
		held_out = {Manipulation(m) for m in self.meta.get("held_out_manipulations", [])}
		held_out_speakers = set(self.meta.get("held_out_speakers", []))

		real_counts, train_pool = {}, {}
		for record in self.records:
			spec = record.spec
			spec.validate()
			if spec.duration_segments < geometry.n_seg:
				raise DatasetError(f"Clip {spec.clip_id} is shorter than one window ({geometry.n_seg} segments)")
			if record.is_real:
				real_counts[spec.claimed_id] = real_counts.get(spec.claimed_id, 0) + 1
			if record.pool is Pool.TRAIN:
				train_pool[spec.claimed_id] = train_pool.get(spec.claimed_id, 0) + 1
			if record.pool is not None and not record.is_real:
				raise DatasetError(f"Reference pool clip {spec.clip_id} is not REAL")

			speakers = {spec.claimed_id, spec.speaker_v, spec.speaker_a}
			unseen = spec.manipulation in held_out or bool(speakers & held_out_speakers)
			if record.split in (Split.TRAIN, Split.VAL, Split.TEST_IN) and unseen:
				raise DatasetError(f"Clip {spec.clip_id} leaks held-out data into {record.split.value}")
			if record.split is Split.TEST_UNSEEN and spec.manipulation.is_fake and not unseen:
				raise DatasetError(f"Clip {spec.clip_id} is a seen forgery of a seen speaker in TEST_UNSEEN")

			if record.role is Role.TARGET and record.split is not Split.TRAIN:
				reference = self.record(record.reference_id)
				if reference.pool is not Pool.EVAL:
					raise DatasetError(f"Clip {spec.clip_id} uses a non-evaluation reference")

		for speaker in range(self.meta["n_speakers"]):
			if real_counts.get(speaker, 0) < 2:
				raise DatasetError(f"Speaker {speaker} has fewer than 2 real clips")
			if speaker not in held_out_speakers and train_pool.get(speaker, 0) < 2:
				raise DatasetError(f"Speaker {speaker} has fewer than 2 training reference clips")

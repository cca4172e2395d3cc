"""Target/reference pair streams for training and evaluation."""

from av_identity_guard.exceptions import ConfigError, DatasetError
from av_identity_guard.synthworld.types import Pool, Split

POLICIES = ("train", "eval")


class TrainPairSampler:
	"""Endless class-balanced stream of TRAIN pairs.

	Each draw picks real or fake with probability 1/2, a target uniformly
	within that class, and a reference uniformly from the claimed speaker's
	training pool, never the target recording itself.
	"""

	def __init__(self, dataset, rng):
		targets = dataset.targets(Split.TRAIN)
		self.dataset = dataset
		self.rng = rng
		self.real = [t for t in targets if t.is_real]
		self.fake = [t for t in targets if not t.is_real]
		if not self.real and not self.fake:
			raise DatasetError("TRAIN split has no targets")

		speakers = {t.spec.claimed_id for t in targets}
		self.pools = {s: dataset.reference_pool(s, Pool.TRAIN) for s in sorted(speakers)}

	def draw_target(self):
		classes = [group for group in (self.real, self.fake) if group]
		group = classes[int(self.rng.integers(len(classes)))] if len(classes) > 1 else classes[0]
		return group[int(self.rng.integers(len(group)))]

	def draw_reference(self, target):
		candidates = [r for r in self.pools.get(target.spec.claimed_id, []) if r.clip_id != target.clip_id]
		if not candidates:
			raise DatasetError(f"Speaker {target.spec.claimed_id} has no other real clip to reference")
		return candidates[int(self.rng.integers(len(candidates)))]

	def __iter__(self):
		return self

	def __next__(self):
		target = self.draw_target()
		return self.dataset.make_pair(target, self.draw_reference(target), Split.TRAIN)


def pair_sampler(dataset, policy, rng=None, split=None):
	"""Stream of PairRecord.

	Args:
		dataset: Dataset
		policy: "train" (endless balanced stream) or "eval" (manifest pairs, in order)
		rng: numpy Generator, required for "train"
		split: Split for "eval"

	Returns:
		Iterator of PairRecord
	"""
	if policy == "train":
		if rng is None:
			raise ConfigError("The train policy needs a random generator")
		return TrainPairSampler(dataset, rng)
	if policy == "eval":
		if split is None:
			raise ConfigError("The eval policy needs a split")
		return iter(dataset.eval_pairs(split))
	raise ConfigError(f"Unknown sampling policy {policy!r}; expected one of {POLICIES}")

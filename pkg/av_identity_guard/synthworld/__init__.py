"""Synthetic identity world: speakers, clip rendering, datasets and pair sampling."""

from av_identity_guard.synthworld.types import (
	ClipRecord,
	ClipSpec,
	Manipulation,
	PairRecord,
	Pool,
	Role,
	Speaker,
	Split,
	identity_match_label,
)

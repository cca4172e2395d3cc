"""Feature assembly: segment geometry and the joint audiovisual sequence."""

from av_identity_guard.featpipe.assembler import (
	FeatureAssembler,
	FeatureSequence,
	SequenceLayout,
	StreamRole,
	stack_windows,
)
from av_identity_guard.featpipe.segments import SegmentConfig, segment_stride

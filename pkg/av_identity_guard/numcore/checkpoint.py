"""Little-endian tensor container used for checkpoints, datasets and world files.

Layout:
	magic "RFRE" | version u32 | count u32
	per record: name length u16 | UTF-8 name | rank u8 | dims u32 * rank | f32 data
"""

import struct
from pathlib import Path

import numpy as np

from av_identity_guard.exceptions import CheckpointError

MAGIC = b"RFRE"
VERSION = 1

_HEADER = struct.Struct("<4sII")
_NAME_LEN = struct.Struct("<H")
_RANK = struct.Struct("<B")


def dumps(tensors):
	"""Serialize a mapping name -> array into container bytes, in mapping order."""
	chunks = [_HEADER.pack(MAGIC, VERSION, len(tensors))]
	for name, value in tensors.items():
		encoded = name.encode("utf-8")
		if len(encoded) > 0xFFFF:
			raise CheckpointError(f"Tensor name too long: {name[:40]}...")
		array = np.require(np.asarray(value, dtype="<f4"), requirements="C")
		if array.ndim > 0xFF:
			raise CheckpointError(f"Tensor {name} has rank {array.ndim}")
		chunks.append(_NAME_LEN.pack(len(encoded)))
		chunks.append(encoded)
		chunks.append(_RANK.pack(array.ndim))
		chunks.append(struct.pack(f"<{array.ndim}I", *array.shape))
		chunks.append(array.tobytes())
	return b"".join(chunks)


def loads(payload):
	"""Parse container bytes back into an ordered dict name -> float32 array."""
	view = memoryview(payload)
	if len(view) < _HEADER.size:
		raise CheckpointError("Container is shorter than its header")
	magic, version, count = _HEADER.unpack_from(view, 0)
	if magic != MAGIC:
		raise CheckpointError(f"Bad magic {magic!r}, expected {MAGIC!r}")
	if version != VERSION:
		raise CheckpointError(f"Unsupported container version {version}")

	offset = _HEADER.size
	tensors = {}
	try:
		for _ in range(count):
			(name_len,) = _NAME_LEN.unpack_from(view, offset)
			offset += _NAME_LEN.size
			name = bytes(view[offset : offset + name_len]).decode("utf-8")
			offset += name_len
			(rank,) = _RANK.unpack_from(view, offset)
			offset += _RANK.size
			shape = struct.unpack_from(f"<{rank}I", view, offset)
			offset += 4 * rank
			size = int(np.prod(shape, dtype=np.int64))
			if offset + 4 * size > len(view):
				raise CheckpointError(f"Truncated data for tensor {name}")
			tensors[name] = np.frombuffer(view, dtype="<f4", count=size, offset=offset).reshape(shape).copy()
			offset += 4 * size
	except struct.error as e:
		raise CheckpointError(f"Truncated container: {e}") from e

	if offset != len(view):
		raise CheckpointError(f"{len(view) - offset} trailing bytes after {count} tensors")
	return tensors


def save(path, tensors):
	Path(path).write_bytes(dumps(tensors))


def load(path):
	path = Path(path)
	if not path.exists():
		raise CheckpointError(f"No such container: {path}")
	return loads(path.read_bytes())

"""Common utilities shared between pipeline stages."""

import importlib
import json
import logging
from pathlib import Path

logger = logging.getLogger(__name__)


def log_error(component, message, title=None):
	"""Log a pipeline error.

	Args:
		component: Component name (dataset, train, eval)
		message: Error message
		title: Optional title
	"""
	logger.error("%s: %s", title or f"{component.title()} Error", message)


def get_hook(kind, name):
	"""Resolve a registry entry from `hooks.py` to the object it names.

	Args:
		kind: Registry name (commands, scorers)
		name: Entry name inside that registry

	Returns:
		The imported object
	"""
	from av_identity_guard import hooks

	registry = getattr(hooks, kind, None)
	if registry is None:
		raise ValueError(f"Unknown hook registry: {kind}")
	if name not in registry:
		raise ValueError(f"Unknown {kind} entry: {name}; expected one of {sorted(registry)}")

	module_path, _, attr = registry[name].rpartition(".")
	return getattr(importlib.import_module(module_path), attr)


def write_json(path, data):
	"""Write `data` as stable, sorted JSON so identical runs give identical bytes."""
	path = Path(path)
	path.parent.mkdir(parents=True, exist_ok=True)
	with open(path, "w", encoding="utf-8", newline="\n") as f:
		json.dump(data, f, indent=2, sort_keys=True)
		f.write("\n")


def read_json(path):
	with open(path, encoding="utf-8") as f:
		return json.load(f)

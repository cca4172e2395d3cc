"""Settings documents: JSON field schemas plus controller classes.

Each settings group lives in `settings/<name>/` as a `<name>.json` schema
(field list with types, defaults and descriptions) and a `<name>.py`
controller subclassing `Settings` that adds a `validate()` hook.
"""

import inspect
import json
from functools import cache
from pathlib import Path

from av_identity_guard.exceptions import ConfigError

LAYOUT_FIELDTYPES = {"Section Break", "Column Break"}


@cache
def _load_schema(path):
	with open(path, encoding="utf-8") as f:
		schema = json.load(f)
	return tuple(field for field in schema["fields"] if field["fieldtype"] not in LAYOUT_FIELDTYPES)


def coerce(field, value):
	"""Convert `value` to the Python type of a schema field.

	Args:
		field: Field definition from the schema
		value: Raw value (JSON value or command-line string)

	Returns:
		Converted value
	"""
	fieldtype = field["fieldtype"]
	name = field["fieldname"]
	try:
		if fieldtype == "Int":
			if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
				raise ValueError(value)
			return int(value)
		if fieldtype == "Float":
			return float(value)
		if fieldtype == "Check":
			if isinstance(value, str):
				lowered = value.strip().lower()
				if lowered not in ("0", "1", "true", "false", "yes", "no"):
					raise ValueError(value)
				return lowered in ("1", "true", "yes")
			return bool(value)
		if fieldtype == "Data":
			return str(value)
		if fieldtype == "Select":
			options = field.get("options", "").split("\n")
			if value not in options:
				raise ConfigError(f"{name} must be one of {options}, got {value!r}")
			return value
		if fieldtype == "JSON":
			return json.loads(value) if isinstance(value, str) else value
	except (TypeError, ValueError) as e:
		if isinstance(e, ConfigError):
			raise
		raise ConfigError(f"Invalid {fieldtype} value for {name}: {value!r}") from e
	raise ConfigError(f"Unknown fieldtype {fieldtype} for {name}")


class Settings:
	"""A validated bag of typed fields described by a JSON schema."""

	group = None

	def __init__(self, values=None):
		for field in self.fields():
			setattr(self, field["fieldname"], coerce(field, field.get("default")))
		if values:
			self.update(values)
		self.validate()

	@classmethod
	def fields(cls):
		return _load_schema(Path(inspect.getfile(cls)).with_suffix(".json"))

	@classmethod
	def field(cls, fieldname):
		for field in cls.fields():
			if field["fieldname"] == fieldname:
				return field
		raise ConfigError(f"Unknown {cls.group} setting: {fieldname}")

	def update(self, values):
		for fieldname, value in values.items():
			setattr(self, fieldname, coerce(self.field(fieldname), value))

	def validate(self):
		"""Raise ConfigError on invalid values; overridden per group."""

	def as_dict(self):
		return {field["fieldname"]: getattr(self, field["fieldname"]) for field in self.fields()}


def parse_override(text):
	"""Split `group.field=value` into (group, field, raw value)."""
	key, sep, value = text.partition("=")
	group, dot, fieldname = key.strip().partition(".")
	if not sep or not dot or not group or not fieldname:
		raise ConfigError(f"Override must look like group.field=value, got {text!r}")
	return group, fieldname, value.strip()


def settings_classes():
	from av_identity_guard.settings.dataset_settings.dataset_settings import DatasetSettings
	from av_identity_guard.settings.eval_settings.eval_settings import EvalSettings
	from av_identity_guard.settings.model_settings.model_settings import ModelSettings
	from av_identity_guard.settings.train_settings.train_settings import TrainSettings

	return {cls.group: cls for cls in (DatasetSettings, ModelSettings, TrainSettings, EvalSettings)}


def resolve_config(config=None, overrides=(), groups=None):
	"""Build validated settings for a command.

	Args:
		config: Path to a JSON file, a dict keyed by group, or None
		overrides: Iterable of `group.field=value` strings
		groups: Groups to resolve; defaults to every group

	Returns:
		dict group -> Settings
	"""
	classes = settings_classes()
	groups = list(groups or classes)

	if config is None:
		raw = {}
	elif isinstance(config, dict):
		raw = config
	else:
		path = Path(config)
		if not path.exists():
			raise ConfigError(f"Config file not found: {path}")
		with open(path, encoding="utf-8") as f:
			raw = json.load(f)

	unknown = [group for group in raw if group not in classes]
	if unknown:
		raise ConfigError(f"Unknown settings groups: {unknown}")

	values = {group: dict(raw.get(group, {})) for group in groups}
	for text in overrides:
		group, fieldname, value = parse_override(text)
		if group not in values:
			raise ConfigError(f"Override {text!r} targets a group this command does not use")
		values[group][fieldname] = value

	return {group: classes[group](values[group]) for group in groups}

"""Command-line entry point: gen-data, train, eval and ablate.

Exit codes: 0 success, 1 runtime failure, 2 usage error. Failures print one
line `error=<Class> message=<text>` to stderr.
"""

import argparse
import csv
import json
import logging
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from av_identity_guard import __version__, hooks
from av_identity_guard.avformer.training import train
from av_identity_guard.common.utils import get_hook, log_error, write_json
from av_identity_guard.evalkit.evaluation import evaluate, write_report
from av_identity_guard.evalkit.scorers import DetectorScorer
from av_identity_guard.exceptions import ConfigError, DatasetError
from av_identity_guard.settings import resolve_config
from av_identity_guard.synthworld.dataset import Dataset, generate_dataset
from av_identity_guard.synthworld.types import Split

logger = logging.getLogger(__name__)

RUN_FILE = "run.json"
LOG_FORMAT = "%(asctime)s - %(levelname)s - %(name)s - %(message)s"
ORDER_TOLERANCE = 0.005


@dataclass
class RunConfig:
	"""Everything needed to reproduce a command, written as run.json."""

	command: str
	seed: int
	paths: dict = field(default_factory=dict)
	overrides: dict = field(default_factory=dict)
	config: dict = field(default_factory=dict)
	extra: dict = field(default_factory=dict)

	@classmethod
	def from_args(cls, args, settings, seed, **paths):
		overrides = dict(text.split("=", 1) for text in args.set)
		return cls(
			command=args.command,
			seed=seed,
			paths={name: str(value) for name, value in paths.items() if value is not None},
			overrides=overrides,
			config={group: s.as_dict() for group, s in settings.items()},
		)

	def to_dict(self):
		return {
			"command": self.command,
			"seed": self.seed,
			"paths": self.paths,
			"overrides": self.overrides,
			"config": self.config,
			"code_version": __version__,
			**self.extra,
		}

	def write(self, out_dir):
		write_json(Path(out_dir) / RUN_FILE, self.to_dict())


def _existing(path, what):
	path = Path(path)
	if not path.exists():
		raise DatasetError(f"{what} not found: {path}")
	return path


# ==========================================================================
# Commands
# ==========================================================================


def gen_data(args):
	settings = resolve_config(args.config, args.set, groups=["dataset"])
	dataset_settings = settings["dataset"]
	generate_dataset(dataset_settings, args.out, progress=not args.quiet)
	RunConfig.from_args(args, settings, dataset_settings.seed, out=args.out).write(args.out)
	return 0


def train_command(args):
	data = _existing(args.data, "Dataset directory")
	settings = resolve_config(args.config, args.set, groups=["model", "train", "eval"])
	dataset = Dataset.load(data)
	result = train(
		dataset,
		settings["model"],
		settings["train"],
		settings["eval"],
		out_dir=args.out,
		progress=not args.quiet,
	)
	run = RunConfig.from_args(args, settings, settings["train"].seed, data=data, out=args.out)
	run.extra = {"param_count": result.param_count, "dataset_seed": dataset.meta["seed"]}
	run.write(args.out)
	return 0


def eval_command(args):
	data = _existing(args.data, "Dataset directory")
	settings = resolve_config(args.config, args.set, groups=["eval"])
	eval_settings = settings["eval"]
	ckpt = _existing(args.ckpt, "Checkpoint") if args.ckpt else None

	factory = get_hook("scorers", args.scorer)
	scorer = factory(run_dir=ckpt, batch_size=eval_settings.batch_size, seed=args.seed)
	report, rows = evaluate(scorer, Dataset.load(data), args.split, eval_settings, progress=not args.quiet)

	if args.out:
		write_report(report, rows, args.out, write_csv=eval_settings.write_csv)
		run = RunConfig.from_args(args, settings, args.seed, data=data, ckpt=ckpt, out=args.out)
		run.extra = {"scorer": args.scorer, "split": Split.parse(args.split).value}
		run.write(args.out)
	print(json.dumps(report.to_dict(), sort_keys=True))
	return 0


def _slug(label):
	return re.sub(r"[^a-z0-9]+", "-", label.lower()).strip("-")


def run_ablation(suite, dataset, config=None, overrides=(), seeds=(0,), split=Split.TEST_UNSEEN, out_dir=None, progress=False):
	"""Train and evaluate every row of an ablation suite over several seeds.

	Returns:
		list of row dicts with per-seed and mean metrics, in suite order
	"""
	if suite not in hooks.ablation_suites:
		raise ConfigError(f"Unknown ablation suite {suite!r}; expected one of {sorted(hooks.ablation_suites)}")

	table = []
	for label, row_overrides in hooks.ablation_suites[suite]:
		runs = []
		for seed in seeds:
			texts = [*overrides, *(f"{k}={v}" for k, v in row_overrides.items()), f"train.seed={seed}"]
			settings = resolve_config(config, texts, groups=["model", "train", "eval"])
			run_dir = Path(out_dir) / _slug(label) / f"seed_{seed}" if out_dir else None
			logger.info("Ablation %s / %s, seed %d", suite, label, seed)

			result = train(dataset, settings["model"], settings["train"], settings["eval"], run_dir, progress)
			scorer = DetectorScorer(result.model, settings["eval"].batch_size)
			report, _ = evaluate(scorer, dataset, split, settings["eval"])
			runs.append({"seed": seed, "acc": report.acc, "auc": report.auc, "ap": report.ap})

			if run_dir is not None:
				run = RunConfig("ablate", seed, {"out": str(run_dir)}, dict(t.split("=", 1) for t in texts))
				run.config = {group: s.as_dict() for group, s in settings.items()}
				run.extra = {"param_count": result.param_count, "suite": suite, "row": label}
				run.write(run_dir)

		table.append(
			{
				"row": label,
				"param_count": result.param_count,
				"runs": runs,
				"acc": float(np.mean([r["acc"] for r in runs])),
				"auc": float(np.mean([r["auc"] for r in runs])),
				"auc_std": float(np.std([r["auc"] for r in runs])),
				"ap": float(np.mean([r["ap"] for r in runs])),
			}
		)
	return table


def ordering_holds(table, tolerance=ORDER_TOLERANCE):
	"""True when mean AUC never rises down the table by more than `tolerance`."""
	aucs = [row["auc"] for row in table]
	return all(later <= earlier + tolerance for earlier, later in zip(aucs, aucs[1:]))


def format_table(table):
	lines = [f"{'row':<24} {'params':>8} {'acc':>7} {'auc':>7} {'ap':>7}"]
	for row in table:
		lines.append(f"{row['row']:<24} {row['param_count']:>8d} {row['acc']:>7.4f} {row['auc']:>7.4f} {row['ap']:>7.4f}")
	return "\n".join(lines)


def ablate_command(args):
	data = _existing(args.data, "Dataset directory")
	split = Split.parse(args.split)
	table = run_ablation(
		args.suite,
		Dataset.load(data),
		config=args.config,
		overrides=args.set,
		seeds=args.seeds,
		split=split,
		out_dir=args.out,
		progress=not args.quiet,
	)
	summary = {"suite": args.suite, "split": split.value, "seeds": list(args.seeds), "rows": table}
	if args.suite in hooks.ordered_suites:
		summary["ordering_holds"] = ordering_holds(table)

	out = Path(args.out)
	write_json(out / "ablation.json", summary)
	with open(out / "ablation.csv", "w", encoding="utf-8", newline="") as f:
		writer = csv.writer(f, lineterminator="\n")
		writer.writerow(["row", "param_count", "acc", "auc", "auc_std", "ap"])
		for row in table:
			writer.writerow([row["row"], row["param_count"], row["acc"], row["auc"], row["auc_std"], row["ap"]])

	settings = resolve_config(args.config, args.set, groups=["model", "train", "eval"])
	run = RunConfig.from_args(args, settings, args.seeds[0], data=data, out=args.out)
	run.extra = {"suite": args.suite, "seeds": list(args.seeds), "split": split.value}
	run.write(out)

	print(format_table(table))
	if "ordering_holds" in summary:
		print(f"ordering_holds={summary['ordering_holds']}")
	return 0


# ==========================================================================
# Parser and entry point
# ==========================================================================


def build_parser():
	parser = argparse.ArgumentParser(
		prog="av-identity-guard",
		description="Reference-aware audiovisual deepfake detection on a synthetic identity world",
	)
	parser.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
	parser.add_argument("--quiet", action="store_true", help="Disable progress bars")

	common = argparse.ArgumentParser(add_help=False)
	common.add_argument("--config", help="JSON file keyed by settings group")
	common.add_argument(
		"--set", action="append", default=[], metavar="GROUP.FIELD=VALUE", help="Override one setting"
	)

	sub = parser.add_subparsers(dest="command", required=True)

	p = sub.add_parser("gen-data", parents=[common], help="Generate a synthetic dataset")
	p.add_argument("--out", required=True, help="Dataset directory")

	p = sub.add_parser("train", parents=[common], help="Train a detector")
	p.add_argument("--data", required=True)
	p.add_argument("--out", required=True, help="Run directory")

	p = sub.add_parser("eval", parents=[common], help="Evaluate a scorer on a split")
	p.add_argument("--data", required=True)
	p.add_argument("--ckpt", help="Run directory or model.bin of a trained detector")
	p.add_argument("--split", default="test_in")
	p.add_argument("--scorer", default="detector", choices=sorted(hooks.scorers))
	p.add_argument("--seed", type=int, default=0, help="Seed of the random scorer")
	p.add_argument("--out", help="Directory for report.json and scores.csv")

	p = sub.add_parser("ablate", parents=[common], help="Run an ablation suite")
	p.add_argument("--suite", required=True, choices=sorted(hooks.ablation_suites))
	p.add_argument("--data", required=True)
	p.add_argument("--out", required=True)
	p.add_argument("--seeds", type=int, nargs="+", default=[0])
	p.add_argument("--split", default="test_unseen")
	return parser


def configure_logging(level):
	logging.basicConfig(level=getattr(logging, level), format=LOG_FORMAT, stream=sys.stderr, force=True)


def run(argv=None):
	"""Parse `argv`, run the command and return the process exit code."""
	parser = build_parser()
	try:
		args = parser.parse_args(argv)
	except SystemExit as e:
		return e.code if isinstance(e.code, int) else 2

	configure_logging(args.log_level)
	try:
		return get_hook("commands", args.command)(args) or 0
	except Exception as e:
		log_error(args.command, repr(e))
		logger.debug("Traceback", exc_info=True)
		message = " ".join(str(e).split())
		print(f"error={type(e).__name__} message={message}", file=sys.stderr)
		return 1


def main():
	sys.exit(run())


if __name__ == "__main__":
	main()

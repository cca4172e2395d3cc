import json

import pytest

from av_identity_guard import __version__
from av_identity_guard.cli import build_parser, format_table, ordering_holds, run
from av_identity_guard.synthworld.dataset import MANIFEST, TENSORS, WORLD

TINY_MODEL_OVERRIDES = [
	"model.d_model=16",
	"model.d_raw=16",
	"model.n_queries=3",
	"model.idb_layers=1",
	"model.match_layers=1",
	"model.av_layers=1",
	"model.num_heads=2",
	"model.dropout=0",
	"train.steps=2",
	"train.batch_size=2",
	"train.warmup_steps=0",
	"train.log_every=1",
]


def _set(overrides):
	return [arg for text in overrides for arg in ("--set", text)]


@pytest.fixture
def config_file(tmp_path):
	path = tmp_path / "config.json"
	dataset = {
		"seed": 7,
		"n_speakers": 5,
		"clips_per_speaker": 14,
		"held_out_speakers": 1,
		"train_references": 2,
		"eval_references": 2,
		"min_segments": 8,
		"max_segments": 12,
		"d_id": 8,
		"d_raw": 16,
	}
	path.write_text(json.dumps({"dataset": dataset}))
	return path


@pytest.fixture
def data_dir(tmp_path, config_file):
	out = tmp_path / "data"
	assert run(["--quiet", "gen-data", "--config", str(config_file), "--out", str(out)]) == 0
	return out


def test_usage_errors_exit_with_two(capsys):
	assert run([]) == 2
	assert run(["train"]) == 2
	assert run(["eval", "--data", "x", "--scorer", "psychic"]) == 2


def test_help_exits_cleanly(capsys):
	assert run(["--help"]) == 0
	assert "gen-data" in capsys.readouterr().out


def test_runtime_errors_print_one_line(tmp_path, capsys):
	assert run(["--quiet", "eval", "--data", str(tmp_path / "missing"), "--scorer", "oracle"]) == 1
	err = capsys.readouterr().err.strip().splitlines()
	assert err[-1].startswith("error=DatasetError message=")


def test_bad_override_is_a_config_error(data_dir, capsys):
	assert run(["--quiet", "eval", "--data", str(data_dir), "--scorer", "oracle", "--set", "eval.window"]) == 1
	assert "error=ConfigError" in capsys.readouterr().err


def test_gen_data_writes_dataset_and_run_file(data_dir):
	for name in (MANIFEST, TENSORS, WORLD, "run.json"):
		assert (data_dir / name).exists()
	run_file = json.loads((data_dir / "run.json").read_text())
	assert run_file["command"] == "gen-data"
	assert run_file["seed"] == 7
	assert run_file["code_version"] == __version__
	assert run_file["config"]["dataset"]["n_speakers"] == 5


def test_gen_data_is_deterministic(data_dir, tmp_path, config_file):
	again = tmp_path / "again"
	assert run(["--quiet", "gen-data", "--config", str(config_file), "--out", str(again)]) == 0
	for name in (MANIFEST, TENSORS, WORLD):
		assert (data_dir / name).read_bytes() == (again / name).read_bytes()


def test_eval_oracle(data_dir, tmp_path, capsys):
	out = tmp_path / "eval"
	code = run(["--quiet", "eval", "--data", str(data_dir), "--scorer", "oracle", "--split", "test_unseen", "--out", str(out)])
	assert code == 0
	printed = json.loads(capsys.readouterr().out)
	assert printed["auc"] == printed["ap"] == printed["acc"] == 1.0
	assert json.loads((out / "report.json").read_text()) == printed
	run_file = json.loads((out / "run.json").read_text())
	assert run_file["scorer"] == "oracle"
	assert run_file["split"] == "TEST_UNSEEN"


def test_train_then_eval_detector(data_dir, tmp_path, capsys):
	run_dir = tmp_path / "run"
	assert run(["--quiet", "train", "--data", str(data_dir), "--out", str(run_dir), *_set(TINY_MODEL_OVERRIDES)]) == 0
	assert (run_dir / "model.bin").exists()
	assert (run_dir / "train_log.jsonl").exists()
	run_file = json.loads((run_dir / "run.json").read_text())
	assert run_file["param_count"] > 0
	assert run_file["overrides"]["model.n_queries"] == "3"

	capsys.readouterr()
	code = run(["--quiet", "eval", "--data", str(data_dir), "--ckpt", str(run_dir), "--split", "test_unseen"])
	assert code == 0
	assert 0.0 <= json.loads(capsys.readouterr().out)["auc"] <= 1.0


def test_eval_detector_needs_a_checkpoint(data_dir, capsys):
	assert run(["--quiet", "eval", "--data", str(data_dir)]) == 1
	assert "error=CheckpointError" in capsys.readouterr().err


def test_ordering_and_table():
	table = [
		{"row": "full", "param_count": 10, "acc": 0.9, "auc": 0.95, "ap": 0.9},
		{"row": "w/o identity loss", "param_count": 10, "acc": 0.8, "auc": 0.953, "ap": 0.8},
		{"row": "w/o reference query", "param_count": 8, "acc": 0.7, "auc": 0.80, "ap": 0.7},
	]
	assert ordering_holds(table)
	table[2]["auc"] = 0.97
	assert not ordering_holds(table)
	lines = format_table(table).splitlines()
	assert len(lines) == 4
	assert lines[1].startswith("full")


def test_parser_defaults():
	args = build_parser().parse_args(["ablate", "--suite", "table4", "--data", "d", "--out", "o"])
	assert args.seeds == [0]
	assert args.split == "test_unseen"
	assert args.set == []


@pytest.mark.slow
def test_ablate_suite(data_dir, tmp_path):
	out = tmp_path / "ablate"
	code = run(["--quiet", "ablate", "--suite", "table4", "--data", str(data_dir), "--out", str(out), *_set(TINY_MODEL_OVERRIDES)])
	assert code == 0
	summary = json.loads((out / "ablation.json").read_text())
	assert [row["row"] for row in summary["rows"]] == ["full", "w/o identity loss", "w/o reference query"]
	assert isinstance(summary["ordering_holds"], bool)
	assert summary["rows"][2]["param_count"] < summary["rows"][0]["param_count"]
	assert (out / "ablation.csv").read_text().startswith("row,param_count")

"""Registry of commands, ablation suites and evaluation scorers."""

from . import __version__ as app_version

app_name = "av_identity_guard"
app_title = "AV Identity Guard"
app_description = "Reference-aware audiovisual deepfake detection on a synthetic identity world"

# Commands
# --------

commands = {
	"gen-data": "av_identity_guard.cli.gen_data",
	"train": "av_identity_guard.cli.train_command",
	"eval": "av_identity_guard.cli.eval_command",
	"ablate": "av_identity_guard.cli.ablate_command",
}

# Scorers
# -------
# Factories called as factory(run_dir=..., batch_size=..., seed=...)

scorers = {
	"detector": "av_identity_guard.evalkit.scorers.detector_scorer",
	"oracle": "av_identity_guard.evalkit.scorers.oracle_scorer",
	"constant": "av_identity_guard.evalkit.scorers.constant_scorer",
	"random": "av_identity_guard.evalkit.scorers.random_scorer",
}

# Ablation Suites
# ---------------
# Ordered (row label, overrides) pairs; overrides use the --set syntax.

ablation_suites = {
	"table4": [
		("full", {}),
		("w/o identity loss", {"train.w_id": "0"}),
		("w/o reference query", {"model.reference_mode": "passthrough"}),
	],
	"table5": [
		("N_q=4, CA=1", {"model.n_queries": "4", "model.match_layers": "1", "model.idb_layers": "2"}),
		("N_q=4, CA=2", {"model.n_queries": "4", "model.match_layers": "2", "model.idb_layers": "2"}),
		("N_q=6, CA=2", {"model.n_queries": "6", "model.match_layers": "2", "model.idb_layers": "2"}),
	],
}

# Rows whose mean AUC must not increase down the table
ordered_suites = {"table4"}

"""
Tests for the command-line entry point and the run functions behind it.
"""

import json
import os

import pandas as pd
import pytest

from local_learning.cli import main
from local_learning.components.blocks.model_file import parse_model_text, read_model_file
from local_learning.components.trainer.loop import METRIC_COLUMNS

SMALL_MLP = """# two blocks
partition 2
linear 2 8
relu
linear 8 2
"""

THREE_BLOCKS = """partition 3
linear 2 8
relu
linear 8 8
relu
linear 8 2
"""

SINGLE_BLOCK = "partition 1\nlinear 2 2\n"

DATA_FLAGS = ["--n", "80", "--batch-size", "16", "--epochs", "2"]


def run(argv, tmp_path, name="out"):
    return main(argv + ["--output-dir", str(tmp_path / name)])


# =============================================================================
# Training commands
# =============================================================================

class TestTrainCommands:
    def test_train_writes_metrics_and_summary(self, model_file, tmp_path):
        path = model_file(SMALL_MLP)
        assert run(["train", "--model", path] + DATA_FLAGS, tmp_path) == 0
        frame = pd.read_csv(tmp_path / "out" / "metrics.csv")
        assert list(frame.columns) == METRIC_COLUMNS
        assert len(frame) == 2 * 2
        with open(tmp_path / "out" / "summary.json", encoding="utf-8") as handle:
            summary = json.load(handle)
        assert summary["mode"] == "sequential"
        assert summary["train_records"] == 64
        assert summary["config"]["model"] == path
        assert read_model_file(str(tmp_path / "out" / "model.txt")) == parse_model_text(SMALL_MLP)

    def test_same_seed_gives_identical_files(self, model_file, tmp_path):
        path = model_file(THREE_BLOCKS)
        for name in ("a", "b"):
            assert run(["train", "--model", path, "--seed", "7"] + DATA_FLAGS, tmp_path, name) == 0
        first = (tmp_path / "a" / "metrics.csv").read_bytes()
        assert first == (tmp_path / "b" / "metrics.csv").read_bytes()

    def test_summary_repeats_the_run(self, model_file, tmp_path):
        path = model_file(SMALL_MLP)
        assert run(["train", "--model", path, "--seed", "3"] + DATA_FLAGS, tmp_path, "a") == 0
        summary = str(tmp_path / "a" / "summary.json")
        assert run(["train", "--config", summary], tmp_path, "b") == 0
        assert (tmp_path / "a" / "metrics.csv").read_bytes() == (tmp_path / "b" / "metrics.csv").read_bytes()

    def test_pipeline(self, model_file, tmp_path):
        assert run(["pipeline", "--model", model_file(THREE_BLOCKS)] + DATA_FLAGS, tmp_path) == 0
        assert os.path.exists(tmp_path / "out" / "stats.csv")
        frame = pd.read_csv(tmp_path / "out" / "metrics.csv")
        assert sorted(frame["block"].unique().tolist()) == [0, 1, 2]
        assert (frame["wall_ms"] == 0.0).all()

    def test_pipeline_needs_two_blocks(self, model_file, tmp_path):
        assert run(["pipeline", "--model", model_file(SINGLE_BLOCK)] + DATA_FLAGS, tmp_path) == 1

    def test_e2e(self, model_file, tmp_path):
        assert run(["e2e", "--model", model_file(THREE_BLOCKS)] + DATA_FLAGS, tmp_path) == 0
        frame = pd.read_csv(tmp_path / "out" / "metrics.csv")
        assert frame["block"].tolist() == [0, 0]

    def test_csv_dataset(self, model_file, tmp_path):
        train_csv, test_csv = tmp_path / "train.csv", tmp_path / "test.csv"
        train_csv.write_text("label,f0,f1\n" + "".join(f"{i % 2},{i},{-i}\n" for i in range(20)))
        test_csv.write_text("label,f0,f1\n0,1,1\n1,2,2\n")
        argv = ["train", "--model", model_file(SMALL_MLP), "--dataset", "csv", "--train-csv", str(train_csv),
                "--test-csv", str(test_csv), "--normalization", "standardize", "--epochs", "1"]
        assert run(argv, tmp_path) == 0

    def test_divergence_exit_code(self, model_file, tmp_path):
        argv = ["train", "--model", model_file(THREE_BLOCKS), "--eta-l", "1e8", "--n", "80",
                "--batch-size", "4", "--epochs", "3"]
        assert run(argv, tmp_path) == 2


# =============================================================================
# Analysis commands
# =============================================================================

class TestAnalysisCommands:
    def test_cost_closed_form(self, capsys):
        assert main(["cost", "--L", "101", "--K", "11", "--eps", "0.1", "--beta-f", "0.02"]) == 0
        out = capsys.readouterr().out
        line = next(line for line in out.splitlines() if line.startswith("K_max (FLOPs)"))
        assert line.split()[-1] == "11"
        assert "(within)" in out

    def test_cost_json(self, capsys):
        assert main(["cost", "--L", "12", "--K", "4", "--target", "0.4", "--json"]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["K"] == 4
        assert report["mem_target"] == 0.4

    def test_cost_against_model(self, model_file, tmp_path, capsys):
        assert run(["cost", "--model", model_file(THREE_BLOCKS), "--n", "80"], tmp_path) == 0
        assert "measured param_ratio" in capsys.readouterr().out
        assert os.path.exists(tmp_path / "out" / "cost.json")

    def test_cost_without_inputs(self):
        assert main(["cost"]) == 1

    def test_probe_single_block(self, model_file, tmp_path, capsys):
        assert run(["probe", "--model", model_file(SINGLE_BLOCK), "--epochs", "0", "--n", "40"], tmp_path) == 0
        frame = pd.read_csv(tmp_path / "out" / "probe.csv")
        assert frame["bias"].tolist() == [0.0]

    def test_probe_after_training(self, model_file, tmp_path):
        assert run(["probe", "--model", model_file(THREE_BLOCKS)] + DATA_FLAGS, tmp_path) == 0
        frame = pd.read_csv(tmp_path / "out" / "probe.csv")
        assert frame["block"].tolist() == [0, 1, 2]
        assert frame["bias"].iloc[-1] == 0.0

    def test_cka(self, model_file, tmp_path):
        assert run(["cka", "--model", model_file(THREE_BLOCKS)] + DATA_FLAGS, tmp_path) == 0
        frame = pd.read_csv(tmp_path / "out" / "cka.csv")
        assert list(frame.columns) == ["layer", "cka"]
        assert frame["cka"].between(-1e-9, 1.0 + 1e-9).all()

    def test_ablation_from_config_file(self, model_file, tmp_path):
        config = tmp_path / "run.toml"
        config.write_text(
            f'model = "{model_file(THREE_BLOCKS)}"\n'
            f'output_dir = "{tmp_path / "ablation"}"\n'
            "epochs = 1\nn = 60\nbatch_size = 16\nablation_seeds = [0, 1]\n"
        )
        assert main(["ablation", "--config", str(config)]) == 0
        frame = pd.read_csv(tmp_path / "ablation" / "ablation.csv")
        assert len(frame) == 2 * 4
        assert frame[["ema", "lb", "scalable"]].drop_duplicates().values.tolist() == [
            [0, 0, 0], [1, 0, 0], [1, 1, 0], [1, 1, 1],
        ]


# =============================================================================
# Usage errors
# =============================================================================

class TestUsageErrors:
    def test_unknown_flag(self, model_file):
        assert main(["train", "--model", model_file(SMALL_MLP), "--bogus"]) == 1

    def test_missing_command(self):
        assert main([]) == 1

    def test_missing_model_file(self, tmp_path):
        assert main(["train", "--model", str(tmp_path / "absent.txt")]) == 1

    def test_invalid_model_text(self, model_file, tmp_path):
        assert run(["train", "--model", model_file("partition 2\nlinear 2 2\nsoftmax\n")], tmp_path) == 1

    def test_nested_config_file(self, model_file, tmp_path):
        config = tmp_path / "run.toml"
        config.write_text(f'model = "{model_file(SMALL_MLP)}"\n[extra]\nkey = 1\n')
        assert main(["train", "--config", str(config)]) == 1

    @pytest.mark.parametrize("flag", [["--epochs", "-1"], ["--alpha", "1.5"], ["--batch-size", "0"]])
    def test_out_of_range_values(self, model_file, flag):
        assert main(["train", "--model", model_file(SMALL_MLP)] + flag) == 1

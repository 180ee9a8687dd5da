"""
Tests for Config and CLI
========================

Unit tests for the YAML run configuration and the command-line flows
(synthesize, train, predict, evaluate, report) with their exit codes.
"""

import json
import os
import sys

import pandas as pd
import pytest
import yaml

# Add src to path for imports
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.config import ENV_SEED, env_default, load_config, parse_config
from src.errors import ConfigError, ExitCode
from src.main import build_parser, main
from src.models.specs import EncoderKind, NormalizationMode

TINY_CONFIG = {
    "epochs": 1,
    "batch_size": 2,
    "horizons": 3,
    "lr": 0.01,
    "encoder": {"kind": "lstm", "hidden": 4, "depth": 3, "layers": 2},
}


def write_yaml(path, document):
    path.write_text(yaml.safe_dump(document), encoding="utf-8")
    return path


class TestRunConfig:
    """Tests for YAML loading and validation."""

    def test_defaults(self):
        """Test loading without a file gives the documented defaults."""
        config = load_config()
        assert config.horizons == 13
        assert config.quantiles == [0.1, 0.5, 0.9]
        assert config.encoder.kind == EncoderKind.LSTM

    def test_yaml_syntax_error_names_line(self, tmp_path):
        """Test a YAML syntax error reports its line."""
        path = tmp_path / "run.yaml"
        path.write_text("epochs: 2\nencoder:\n  kind: [lstm\n", encoding="utf-8")
        with pytest.raises(ConfigError, match="line"):
            load_config(path)

    def test_invalid_key_is_dotted(self, tmp_path):
        """Test a bad nested value names its dotted key."""
        path = write_yaml(tmp_path / "run.yaml", {"encoder": {"hidden": 0}})
        with pytest.raises(ConfigError, match="encoder.hidden"):
            load_config(path)

    def test_unknown_key(self):
        """Test unknown keys are refused."""
        with pytest.raises(ConfigError, match="epochz"):
            parse_config({"epochz": 3})

    def test_unsorted_quantiles(self):
        """Test quantile validation reaches the config layer."""
        with pytest.raises(ConfigError, match="quantiles"):
            parse_config({"quantiles": [0.9, 0.1]})

    def test_top_level_mapping(self, tmp_path):
        """Test a YAML list document is refused."""
        path = tmp_path / "run.yaml"
        path.write_text("- 1\n- 2\n", encoding="utf-8")
        with pytest.raises(ConfigError, match="mapping"):
            load_config(path)

    def test_missing_file(self, tmp_path):
        """Test a missing config file."""
        with pytest.raises(ConfigError):
            load_config(tmp_path / "absent.yaml")

    def test_overrides(self, tmp_path):
        """Test command-line overrides replace file values and None is ignored."""
        path = write_yaml(tmp_path / "run.yaml", {"seed": 1, "threads": 2, "encoder": {"hidden": 8}})
        config = load_config(path, {"seed": 9, "threads": None, "encoder": {"kind": "wavenet"}})
        assert config.seed == 9
        assert config.threads == 2
        assert config.encoder.kind == EncoderKind.WAVENET
        assert config.encoder.hidden == 8

    def test_loggaussian_forces_scale(self):
        """Test the log-Gaussian head switches to scale normalisation."""
        config = parse_config({"head": "loggaussian"})
        assert config.model_spec().normalization == NormalizationMode.SCALE
        assert config.training_config().head.value == "loggaussian"

    def test_env_default(self, monkeypatch):
        """Test typed environment defaults."""
        monkeypatch.setenv(ENV_SEED, "7")
        assert env_default(ENV_SEED, None, int) == 7
        monkeypatch.setenv(ENV_SEED, "seven")
        with pytest.raises(ConfigError):
            env_default(ENV_SEED, None, int)
        monkeypatch.delenv(ENV_SEED)
        assert env_default(ENV_SEED, 3, int) == 3


class TestParser:
    """Tests for argument parsing."""

    def test_unknown_encoder(self):
        """Test an invalid choice exits with the usage code."""
        with pytest.raises(SystemExit) as exc:
            build_parser().parse_args(["train", "--out", "x", "--encoder", "gru"])
        assert exc.value.code == ExitCode.USAGE

    def test_report_fct_destination(self):
        """Test report --fct is kept apart from the list-valued --fct."""
        args = build_parser().parse_args(["report", "--out", "x", "--fct", "12"])
        assert args.report_fct == 12


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """Synthesize a small benchmark and train one model through the CLI."""
    root = tmp_path_factory.mktemp("cli")
    bench = root / "bench"
    assert main(["synthesize", "--out", str(bench), "--n-series", "3", "--length", "30", "--period", "6", "--seed", "1"]) == 0
    config = write_yaml(root / "run.yaml", TINY_CONFIG)
    run = root / "run"
    code = main(["train", "--config", str(config), "--data", str(bench / "data.csv"), "--out", str(run), "--seed", "2"])
    assert code == 0
    return {"root": root, "data": bench / "data.csv", "run": run, "model": run / "model.mqf"}


class TestCommands:
    """End-to-end command flows on a tiny benchmark."""

    def test_synthesize_outputs(self, workspace):
        """Test the benchmark files and manifest."""
        bench = workspace["data"].parent
        assert sorted(p.name for p in bench.iterdir()) == ["data.csv", "manifest.json", "oracle.csv", "schema.yaml"]
        manifest = json.loads((bench / "manifest.json").read_text(encoding="utf-8"))
        assert manifest["command"] == "synthesize"
        assert manifest["arguments"]["n_series"] == 3

    def test_train_outputs(self, workspace):
        """Test the model, loss trace and resolved config are recorded."""
        run = workspace["run"]
        assert workspace["model"].exists()
        assert len(pd.read_csv(run / "loss_trace.csv")) == 1
        manifest = json.loads((run / "manifest.json").read_text(encoding="utf-8"))
        assert manifest["config"]["seed"] == 2
        assert manifest["config"]["horizons"] == 3
        assert str(workspace["model"]) in manifest["outputs"]

    def test_train_is_deterministic(self, workspace):
        """Test two cutting runs with the same seed give byte-identical checkpoints."""
        config = write_yaml(workspace["root"] / "cut.yaml", TINY_CONFIG)
        runs = []
        for name in ("cut_a", "cut_b"):
            run = workspace["root"] / name
            code = main([
                "train", "--config", str(config), "--data", str(workspace["data"]), "--out", str(run),
                "--seed", "7", "--scheme", "cutting",
            ])
            assert code == 0
            runs.append(run)
        assert (runs[0] / "model.mqf").read_bytes() == (runs[1] / "model.mqf").read_bytes()
        assert (runs[0] / "loss_trace.csv").read_bytes() == (runs[1] / "loss_trace.csv").read_bytes()
        manifest = json.loads((runs[0] / "manifest.json").read_text(encoding="utf-8"))
        assert manifest["config"]["scheme"] == "cutting"
        assert manifest["config"]["seed"] == 7

    def test_predict_and_evaluate(self, workspace):
        """Test predict writes grids that evaluate can score."""
        out = workspace["root"] / "predict"
        code = main([
            "predict", "--checkpoint", str(workspace["model"]), "--data", str(workspace["data"]),
            "--fct", "20", "24", "--out", str(out),
        ])
        assert code == 0
        grids = pd.read_csv(out / "grids.csv", dtype={"series_id": str})
        assert len(grids) == 3 * 2 * 3
        assert list(grids.columns) == ["series_id", "fct", "horizon", "q0.1", "q0.5", "q0.9"]

        scored = workspace["root"] / "scored"
        code = main(["evaluate", "--grids", str(out / "grids.csv"), "--data", str(workspace["data"]), "--out", str(scored)])
        assert code == 0
        assert (scored / "metrics.csv").exists()
        assert (scored / "summary.txt").exists()

    def test_predict_is_deterministic(self, workspace):
        """Test two predictions give byte-identical grid files."""
        outputs = []
        for name in ("again_a", "again_b"):
            out = workspace["root"] / name
            main([
                "predict", "--checkpoint", str(workspace["model"]), "--data", str(workspace["data"]),
                "--fct", "22", "--series", "s0001", "--out", str(out),
            ])
            outputs.append((out / "grids.csv").read_bytes())
        assert outputs[0] == outputs[1]

    def test_rolling_evaluate(self, workspace):
        """Test rolling evaluation from a checkpoint."""
        out = workspace["root"] / "rolling"
        code = main([
            "evaluate", "--checkpoint", str(workspace["model"]), "--data", str(workspace["data"]),
            "--fct", "18", "21", "24", "--out", str(out),
        ])
        assert code == 0
        assert set(pd.read_csv(out / "fct_loss.csv")["fct"]) == {18, 21, 24}

    def test_evaluate_without_plan(self, workspace):
        """Test evaluate with neither grids nor FCTs is a usage error."""
        code = main(["evaluate", "--data", str(workspace["data"]), "--out", str(workspace["root"] / "empty")])
        assert code == ExitCode.USAGE

    def test_evaluate_unsorted_fcts(self, workspace):
        """Test a non-increasing rolling plan is a usage error."""
        code = main([
            "evaluate", "--checkpoint", str(workspace["model"]), "--data", str(workspace["data"]),
            "--fct", "24", "18", "--out", str(workspace["root"] / "unsorted"),
        ])
        assert code == ExitCode.USAGE

    def test_report_unknown_series(self, workspace):
        """Test drawing an unknown series exits with the missing-series code."""
        pred = workspace["root"] / "report_grids"
        main([
            "predict", "--checkpoint", str(workspace["model"]), "--data", str(workspace["data"]),
            "--fct", "20", "--out", str(pred),
        ])
        out = workspace["root"] / "figures"
        code = main([
            "report", "--grids", str(pred / "grids.csv"), "--data", str(workspace["data"]),
            "--series", "s0000", "s9999", "--out", str(out),
        ])
        assert code == ExitCode.MISSING_SERIES
        assert (out / "s0000.svg").exists()
        assert (out / "bands.csv").exists()

    def test_missing_checkpoint(self, workspace):
        """Test a missing checkpoint file is a data error."""
        code = main([
            "predict", "--checkpoint", str(workspace["root"] / "absent.mqf"), "--data", str(workspace["data"]),
            "--fct", "20", "--out", str(workspace["root"] / "absent"),
        ])
        assert code == ExitCode.DATA

    def test_bad_config_exit_code(self, workspace, tmp_path):
        """Test an invalid config exits with the config code."""
        config = write_yaml(tmp_path / "bad.yaml", {"epochs": 0})
        code = main(["train", "--config", str(config), "--data", str(workspace["data"]), "--out", str(tmp_path / "r")])
        assert code == ExitCode.CONFIG

    def test_unexpected_error(self, workspace, tmp_path, mocker):
        """Test an unexpected exception maps to the generic failure code."""
        mocker.patch("src.main.write_benchmark", side_effect=RuntimeError("disk full"))
        assert main(["synthesize", "--out", str(tmp_path / "s"), "--n-series", "1", "--length", "5"]) == ExitCode.FAILURE

"""
Tests for the hoi-dno command line and its error reporting
"""

import json

import pytest

from hoi_dno.cli import build_parser, main
from hoi_dno.error_formatter import EXIT_CONFIG, EXIT_ERROR, EXIT_MISSING_FILE, EXIT_OK, exit_code, format_error
from hoi_dno.exceptions import ArtifactError, ConfigError, OptimizationDivergedError


@pytest.fixture
def one_step_config(tmp_path):
    path = tmp_path / "one_step.json"
    phase = {"iterations": 1, "record_time": False}
    path.write_text(json.dumps({"preset": "tiny", "dno": {"phase1": phase, "phase2": phase}}), encoding="utf-8")
    return path


def test_exit_codes():
    """Test the exit status of each error family"""
    assert exit_code(ConfigError("seed", "bad")) == EXIT_CONFIG == 2
    assert exit_code(FileNotFoundError("x")) == EXIT_MISSING_FILE == 3
    assert exit_code(ArtifactError("x")) == EXIT_ERROR == 1


def test_error_formatting():
    """Test the plain error tag and the diverged iterate path"""
    text = format_error(ConfigError("dno.lr", "must be >= 0"), color=False)
    assert text.startswith("✗ [CONFIG ERROR]")
    assert "dno.lr" in text
    assert "\033[" not in text
    diverged = format_error(OptimizationDivergedError(3, "/tmp/it.npy"), color=False)
    assert "[DIVERGED]" in diverged and "Iterate: /tmp/it.npy" in diverged


def test_parser_requires_a_command():
    """Test that a bare invocation is a usage error"""
    with pytest.raises(SystemExit):
        build_parser().parse_args([])


def test_gen_data(tmp_path, capsys):
    """Test corpus generation with the config written beside it"""
    out = tmp_path / "corpus"
    assert main(["gen-data", "--preset", "tiny", "--n", "3", "--seed", "1", "--out", str(out)]) == EXIT_OK
    assert (out / "labels.csv").exists()
    assert json.loads((out / "config.json").read_text(encoding="utf-8"))["seed"] == 1
    assert "✓ Saved corpus of 3 episodes" in capsys.readouterr().out


def test_configuration_errors(tmp_path, capsys):
    """Test exit code 2 for bad seeds, config files and eval arguments"""
    assert main(["gen-data", "--preset", "tiny", "--seed", "-1", "--out", str(tmp_path)]) == EXIT_CONFIG
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"preset": "tiny", "model": {"layers": 2}}), encoding="utf-8")
    assert main(["train", "--config", str(bad)]) == EXIT_CONFIG
    assert "model.layers" in capsys.readouterr().err
    assert main(["eval", "--preset", "tiny"]) == EXIT_CONFIG


def test_missing_files(tmp_path):
    """Test exit code 3 for missing configs, corpora and checkpoints"""
    assert main(["train", "--config", str(tmp_path / "none.json")]) == EXIT_MISSING_FILE
    assert main(["train", "--preset", "tiny", "--corpus", str(tmp_path / "none")]) == EXIT_MISSING_FILE
    args = ["optimize", "--preset", "tiny", "--checkpoint", str(tmp_path / "none.ck"), "--prompt", "lift box"]
    assert main(args) == EXIT_MISSING_FILE


def test_train_writes_checkpoint_and_loss(tmp_path, tiny_corpus_dir):
    """Test a one-step training run"""
    out = tmp_path / "model.ck"
    assert main(["train", "--preset", "tiny", "--corpus", str(tiny_corpus_dir), "--steps", "1", "--out", str(out)]) == EXIT_OK
    assert out.exists()
    assert (tmp_path / "model.ck.loss.csv").read_text(encoding="utf-8").splitlines()[0] == "step,loss"


def test_unknown_prompt(tmp_path, tiny_checkpoint_path):
    """Test that a prompt outside the vocabulary is a configuration error"""
    args = ["optimize", "--preset", "tiny", "--checkpoint", str(tiny_checkpoint_path), "--prompt", "juggle box", "--out", str(tmp_path)]
    assert main(args) == EXIT_CONFIG


def test_optimize_eval_and_plot(tmp_path, tiny_checkpoint_path, one_step_config):
    """Test a run written by optimize, re-evaluated by eval and exported by plot-data"""
    runs = tmp_path / "runs"
    args = [
        "optimize", "--config", str(one_step_config), "--checkpoint", str(tiny_checkpoint_path),
        "--prompt", "lift box", "--out", str(runs), "--no-eval",
    ]
    assert main(args) == EXIT_OK
    run_dir = runs / "two-phase_seed0000"
    assert (run_dir / "out.seq").exists()

    args = ["eval", str(run_dir), "--config", str(one_step_config), "--checkpoint", str(tiny_checkpoint_path), "--summary", str(tmp_path / "table.csv")]
    assert main(args) == EXIT_OK
    assert "grasp" in json.loads((run_dir / "metrics.json").read_text(encoding="utf-8"))
    assert (tmp_path / "table.csv").exists()

    assert main(["plot-data", str(run_dir), "--out", str(tmp_path / "plot.csv")]) == EXIT_OK
    assert len((tmp_path / "plot.csv").read_text(encoding="utf-8").splitlines()) == 2

    assert main(["roundtrip", str(run_dir / "out.seq"), "--rig", "toy"]) == EXIT_OK


def test_roundtrip(tiny_corpus_dir, capsys):
    """Test byte-exact re-encoding and the rig check of corpus episodes"""
    episode = tiny_corpus_dir / "episodes" / "0000.seq"
    assert main(["roundtrip", str(episode)]) == EXIT_OK
    assert "round trip byte for byte" in capsys.readouterr().out
    assert main(["roundtrip", str(episode), "--rig", "omomo"]) == EXIT_ERROR


@pytest.mark.slow
def test_ground_truth_realism(tmp_path, tiny_corpus_dir):
    """Test corpus evaluation with classifier metrics on the held-out split"""
    out = tmp_path / "gt"
    args = ["eval", "--preset", "tiny", "--corpus", str(tiny_corpus_dir), "--realism", "--classifier-steps", "3", "--out", str(out)]
    assert main(args) == EXIT_OK
    payload = json.loads((out / "metrics.json").read_text(encoding="utf-8"))
    assert payload["mode"] == "ground-truth"
    assert set(payload["realism"]) == {"fid", "diversity", "multimodality", "ira", "r_prec", "ave"}

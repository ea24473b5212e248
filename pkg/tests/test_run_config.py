"""
Tests for presets, config documents and config hashes
"""

import json

import pytest

from hoi_dno.exceptions import ConfigError
from hoi_dno.run_config import RunConfig, canonical_hash, load_run_config, preset, save_run_config


def test_presets():
    """Test the built-in presets"""
    tiny = preset("tiny")
    assert (tiny.model.prefix_frames, tiny.model.generated_frames, tiny.model.steps) == (2, 8, 4)
    assert tiny.dno.phase1.iterations == 20
    omomo = preset("omomo")
    assert omomo.model.rig == "omomo"
    assert omomo.weights.feet_floor_contact > 0
    assert preset("high-penetration").weights.pen_human_object == pytest.approx(0.9)
    assert preset("grab").weights.pen_human_object == pytest.approx(0.05)
    with pytest.raises(ConfigError) as exc:
        preset("huge")
    assert exc.value.key_path == "preset"


def test_document_overlays_preset():
    """Test that a document only replaces the values it names"""
    config = RunConfig.from_dict({"preset": "tiny", "seed": 4, "dno": {"phase1": {"iterations": 5}}})
    assert config.seed == 4
    assert config.dno.phase1.iterations == 5
    assert config.dno.phase1.lr == pytest.approx(0.05)
    assert config.dno.phase2.iterations == 20
    assert config.model.hidden == 32


def test_single_phase_settings_are_optional():
    """Test the single-phase optimizer section and its absence from preset documents"""
    config = RunConfig.from_dict({"preset": "tiny", "dno": {"single": {"iterations": 7}}})
    assert config.dno.single.iterations == 7
    assert config.dno.phase2.iterations == 20
    assert preset("tiny").dno.single is None
    assert "single" not in preset("tiny").to_dict()["dno"]
    with pytest.raises(ConfigError) as exc:
        RunConfig.from_dict({"dno": {"single": {"momentum": 0.9}}})
    assert exc.value.key_path == "dno.single.momentum"


@pytest.mark.parametrize(
    "document, key_path",
    [
        ({"colour": "red"}, "colour"),
        ({"model": {"depth": 3}}, "model.depth"),
        ({"dno": {"phase2": {"momentum": 0.9}}}, "dno.phase2.momentum"),
        ({"training": {"holdout": 1.0}}, "training.holdout"),
        ({"weights": {"contact": -1.0}}, "weights.contact"),
        ({"version": 2}, "version"),
        ({"model": 3}, "model"),
        ({"paths": {"runs": 5}}, "paths.runs"),
    ],
)
def test_invalid_documents_name_the_key(document, key_path):
    """Test that every rejected document reports the offending key path"""
    with pytest.raises(ConfigError) as exc:
        RunConfig.from_dict(document)
    assert exc.value.key_path == key_path


def test_model_shape_is_checked():
    """Test that head counts must divide the hidden width"""
    with pytest.raises(ConfigError) as exc:
        RunConfig.from_dict({"model": {"hidden": 30, "heads": 4}})
    assert exc.value.key_path.startswith("model.")


def test_config_hash():
    """Test that the hash follows the values and ignores key order"""
    a = preset("tiny")
    b = RunConfig.from_dict({"preset": "tiny"})
    assert a.config_hash() == b.config_hash()
    b.seed = 1
    assert a.config_hash() != b.config_hash()
    assert canonical_hash({"x": 1, "y": 2}) == canonical_hash({"y": 2, "x": 1})


def test_config_file(tmp_path):
    """Test saving and loading a config file"""
    config = RunConfig.from_dict({"preset": "omomo", "n_segments": 2})
    path = save_run_config(config, tmp_path / "nested" / "config.json")
    loaded = load_run_config(path)
    assert loaded.config_hash() == config.config_hash()
    assert json.loads(path.read_text(encoding="utf-8"))["n_segments"] == 2


def test_bad_config_files(tmp_path):
    """Test missing files and malformed JSON"""
    with pytest.raises(FileNotFoundError):
        load_run_config(tmp_path / "none.json")
    path = tmp_path / "broken.json"
    path.write_text('{"seed": ', encoding="utf-8")
    with pytest.raises(ConfigError) as exc:
        load_run_config(path)
    assert exc.value.key_path == "config"

"""
Tests for scripted episodes and corpus files
"""

import filecmp

import numpy as np
import pytest

from hoi_dno.config import DefaultsConfig
from hoi_dno.datasynth import (
    PhaseBounds,
    ScenarioSpec,
    Shape,
    Verb,
    assign_splits,
    build_scene,
    episode_goals,
    idle_prefix,
    load_corpus,
    make_dataset,
    object_mesh,
    prompt_vocabulary,
    read_labels,
    rest_position,
    scenario_for,
    synth_episode,
)
from hoi_dno.exceptions import ArtifactError, EncodingError
from hoi_dno.representation import decode_features, threshold_bits
from hoi_dno.rig import LEFT_HAND, RIGHT_HAND


def test_vocabulary_pairs_every_verb_and_shape():
    """Test the closed prompt vocabulary"""
    vocab = prompt_vocabulary()
    assert len(vocab) == 9
    assert "lift box" in vocab and "pass sphere" in vocab


def test_scenarios_cycle_verbs_then_shapes():
    """Test that episode i gets verb i % 3 and shape (i // 3) % 3"""
    specs = [scenario_for(i, seed=0) for i in range(9)]
    assert [s.verb for s in specs[:3]] == [Verb.LIFT, Verb.PLACE, Verb.PASS]
    assert [s.shape for s in specs[::3]] == [Shape.BOX, Shape.CYLINDER, Shape.SPHERE]
    assert len({s.seed for s in specs}) == 9


def test_assign_splits():
    """Test the seeded holdout and its bounds"""
    splits = assign_splits(9, seed=3, holdout=0.34)
    assert splits.count("test") == 3
    assert splits == assign_splits(9, seed=3, holdout=0.34)
    assert assign_splits(4, seed=0) == ["train"] * 4
    with pytest.raises(ValueError):
        assign_splits(4, seed=0, holdout=1.0)


def test_phase_bounds_scale_with_duration():
    """Test the default timeline and a rescaled one"""
    assert PhaseBounds.for_duration(115, 15).contact == (40, 95)
    scaled = PhaseBounds.for_duration(215, 15)
    assert scaled.idle == (0, 15)
    assert scaled.retreat[1] == 215


def test_scenario_needs_frames_after_prefix():
    """Test that a duration no longer than the prefix is rejected"""
    with pytest.raises(EncodingError):
        ScenarioSpec(prefix_frames=15, generated_frames=0)


def test_object_rests_on_table():
    """Test that every object sits just above the table top"""
    scene = build_scene(0.85)
    for shape in Shape:
        mesh = object_mesh(shape)
        centre = rest_position(mesh, 0.85, 0.38)
        bottom = centre[2] + mesh.bounds[0][2]
        assert bottom == pytest.approx(0.85 + DefaultsConfig.OBJECT_CLEARANCE)
    assert scene.table.bounds[1][2] == pytest.approx(0.85)


def test_corpus_layout(tiny_corpus_dir, tiny_corpus):
    """Test the files, labels and splits of a written corpus"""
    assert (tiny_corpus_dir / "vocab.txt").exists()
    assert sorted(p.name for p in (tiny_corpus_dir / "objects").iterdir()) == ["box.obj", "cylinder.obj", "sphere.obj"]
    assert len(tiny_corpus) == 9
    assert len(tiny_corpus.split("test")) == 3
    assert sorted(e.verb for e in tiny_corpus.entries) == ["lift"] * 3 + ["pass"] * 3 + ["place"] * 3
    assert [r.name for r in read_labels(tiny_corpus_dir / "labels.csv")][:2] == ["0000", "0001"]


def test_contacts_only_during_contact_phase(tiny_corpus, toy_rig):
    """Test that contact bits are set inside the contact phase and nowhere else"""
    for entry in tiny_corpus.entries:
        start, end = entry.meta["phases"]["contact"]
        tracks = decode_features(entry.features, entry.root, toy_rig)
        bits = threshold_bits(tracks.contacts.bits)
        assert bits[:start].sum() == 0 and bits[end:].sum() == 0
        assert np.all(bits[start:end] == bits[start])
        counts = entry.meta["contact_counts"]
        assert counts[LEFT_HAND] >= DefaultsConfig.MIN_CONTACT_ANCHORS
        assert counts[RIGHT_HAND] >= DefaultsConfig.MIN_CONTACT_ANCHORS


def test_human_is_idle_during_prefix(tiny_corpus, toy_rig):
    """Test that the first frames hold the rest pose"""
    entry = tiny_corpus.entries[0]
    tracks = decode_features(entry.features, entry.root, toy_rig)
    p = entry.meta["prefix_frames"]
    np.testing.assert_allclose(tracks.human.rotations[:p], np.tile(np.eye(3), (p, toy_rig.n_joints, 1, 1)), atol=1e-9)


def test_lift_returns_object_to_rest():
    """Test that a lift raises the object and puts it back"""
    episode = synth_episode(ScenarioSpec(verb="lift", shape="sphere", seed=1))
    z = episode.tracks.obj.translations[:, 2]
    assert z.max() > z[0] + 0.1
    assert z[-1] == pytest.approx(z[0])
    goals = episode_goals(episode)
    assert goals.frames == [episode.phases.carry[1] - 1, len(episode.tracks) - 1]


def test_idle_prefix_has_no_contacts(toy_rig):
    """Test the standing prefix used to seed generation"""
    tracks = idle_prefix(ScenarioSpec(prefix_frames=1), toy_rig)
    assert len(tracks) == 2
    assert tracks.contacts.bits.sum() == 0


def test_load_corpus_checks_rig(tiny_corpus_dir, omomo_rig):
    """Test that a corpus refuses a rig with a different hash"""
    with pytest.raises(ArtifactError):
        load_corpus(tiny_corpus_dir, rig=omomo_rig)


def test_missing_and_malformed_labels(tmp_path):
    """Test label files without columns and missing corpus directories"""
    path = tmp_path / "labels.csv"
    path.write_text("file,prompt\nx.seq,lift box\n", encoding="utf-8")
    with pytest.raises(ArtifactError):
        read_labels(path)
    with pytest.raises(FileNotFoundError):
        load_corpus(tmp_path / "nowhere")


@pytest.mark.slow
def test_make_dataset_is_byte_identical(tmp_path, toy_rig):
    """Test that equal arguments write identical corpora"""
    a, b = tmp_path / "a", tmp_path / "b"
    make_dataset(a, 2, seed=11, rig=toy_rig)
    make_dataset(b, 2, seed=11, rig=toy_rig)
    for rel in ("labels.csv", "vocab.txt", "episodes/0000.seq", "episodes/0001.seq", "objects/box.obj"):
        assert filecmp.cmp(a / rel, b / rel, shallow=False), rel

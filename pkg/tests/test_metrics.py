"""
Tests for realism, grasp and condition metrics and their aggregation
"""

import json

import numpy as np
import pytest

from hoi_dno.exceptions import ArtifactError, MetricError
from hoi_dno.geometry import SdfGrid, inside_by_winding, nearest_points, object_sdf, query_sdf
from hoi_dno.losses import GoalSpec
from hoi_dno.metrics import (
    EmbedClassifier,
    aggregate_runs,
    ave,
    chois_suite,
    contact_scores,
    diversity,
    export_table,
    feet_metrics,
    fid,
    flatten_metrics,
    frechet_distance,
    goal_errors,
    hand_contacts,
    hand_penetration,
    hand_signed_distances,
    multimodality,
    penetration_floating,
    pose_sequence,
    sequence_features,
    summary_table,
)
from hoi_dno.pipeline import evaluate_corpus, evaluate_realism, train_classifier
from hoi_dno.rig import LEFT_HAND, RIGHT_HAND


def write_metrics(run_dir, payload):
    run_dir.mkdir(parents=True)
    (run_dir / "metrics.json").write_text(json.dumps(payload), encoding="utf-8")
    return run_dir


def test_frechet_distance_of_shifted_gaussians():
    """Test that equal covariances leave only the squared mean shift"""
    mu = np.zeros(2)
    sigma = np.eye(2)
    assert frechet_distance(mu, sigma, mu, sigma) == pytest.approx(0.0, abs=1e-9)
    assert frechet_distance(mu, sigma, mu + [1.0, 1.0], sigma) == pytest.approx(2.0, abs=1e-9)


def test_fid_of_identical_sets_is_zero():
    """Test identical and shifted sets and the sample-count check"""
    x = np.random.default_rng(0).normal(size=(20, 4))
    assert fid(x, x) == pytest.approx(0.0, abs=1e-8)
    assert fid(x, x + 3.0) == pytest.approx(36.0, rel=1e-6)
    with pytest.raises(MetricError):
        fid(x[:1], x[1:3])


def test_fid_of_nearly_equal_sets_is_small_and_non_negative():
    """Test that a tiny perturbation gives a tiny, never negative distance"""
    rng = np.random.default_rng(1)
    x = rng.normal(size=(30, 6))
    for scale in (1e-12, 1e-9, 1e-6):
        value = fid(x, x + scale * rng.normal(size=x.shape))
        assert 0.0 <= value < 1e-6


def test_diversity_and_multimodality():
    """Test mean pair distances, seeded pair draws and singleton groups"""
    assert diversity(np.array([[0.0, 0.0], [3.0, 4.0]])) == pytest.approx(5.0)
    x = np.random.default_rng(1).normal(size=(10, 3))
    assert diversity(x, n_pairs=50, seed=2) == diversity(x, n_pairs=50, seed=2)
    with pytest.raises(MetricError):
        diversity(x[:1])
    groups = {"lift": np.array([[0.0], [2.0]]), "pass": np.array([[7.0]])}
    assert multimodality(groups) == pytest.approx(2.0)
    with pytest.raises(MetricError):
        multimodality({"pass": np.array([[7.0]])})


def test_ave():
    """Test the per-joint variance error of paired tracks"""
    still = np.zeros((4, 1, 3))
    moving = np.zeros((4, 1, 3))
    moving[:, 0, 0] = [1.0, -1.0, 1.0, -1.0]
    assert ave([still], [still]) == 0.0
    assert ave([still], [moving]) == pytest.approx(1.0)
    with pytest.raises(MetricError):
        ave([still], [])


def test_contact_scores():
    """Test precision, recall and F1, including empty sides"""
    assert contact_scores([1, 1, 0, 0], [1, 0, 1, 0]) == pytest.approx((0.5, 0.5, 0.5))
    assert contact_scores([0, 0], [0, 0]) == (1.0, 1.0, 1.0)
    assert contact_scores([0, 0], [1, 0]) == (0.0, 0.0, 0.0)


def test_hand_contacts_from_bits(toy_rig):
    """Test per-hand flags from anchor bits"""
    bits = np.zeros((2, toy_rig.n_anchors))
    bits[0, 0] = 0.9
    bits[1, -1] = 0.7
    np.testing.assert_array_equal(hand_contacts(bits, toy_rig, from_distances=False), [[True, False], [False, True]])


def test_goal_errors_in_millimetres():
    """Test start, end and planar keyframe errors"""
    translations = np.zeros((5, 3))
    goals = GoalSpec(frames=[4, 1], translations=[[0.0, 0.003, 0.004], [0.001, 0.0, 0.0]])
    t_s, t_e, t_xy = goal_errors(translations, goals)
    assert t_s == pytest.approx(1.0)
    assert t_e == pytest.approx(5.0)
    assert t_xy == pytest.approx(3.0)
    assert goal_errors(translations, None) == (None, None, None)


def test_ground_truth_interaction_metrics(tiny_corpus, toy_rig):
    """Test that scripted contacts are detected and the feet stay planted"""
    entry = tiny_corpus.entries[0]
    metrics = chois_suite(entry.features, entry.root, toy_rig, entry.object_mesh)
    assert metrics.C_rec == 1.0
    assert metrics.C_prec > 0.8
    assert metrics.T_s is None
    assert 0.0 < metrics.contact_percent < 100.0
    h_feet, fs = feet_metrics(pose_sequence(entry.features, entry.root, toy_rig), toy_rig)
    assert h_feet >= 0.0
    assert fs == pytest.approx(0.0, abs=1e-6)


def constant_sdf(value):
    """Grid spanning 100 m per side that reads the same distance everywhere"""
    return SdfGrid(origin=np.full(3, -50.0), cell=50.0, values=np.full((3, 3, 3), value))


def test_hand_penetration_reads_object_sdf(tiny_corpus, toy_rig):
    """Test that P_hand is the mean hand depth read from the object SDF, in millimetres"""
    entry = tiny_corpus.entries[0]
    posed = pose_sequence(entry.features, entry.root, toy_rig)
    assert hand_penetration(posed, toy_rig, constant_sdf(-0.01)) == pytest.approx(10.0)
    assert hand_penetration(posed, toy_rig, constant_sdf(0.2)) == 0.0
    metrics = chois_suite(entry.features, entry.root, toy_rig, entry.object_mesh, sdf=constant_sdf(-0.01))
    assert metrics.P_hand == pytest.approx(10.0)


def test_hand_signed_distances_track_exact_kernels(tiny_corpus, toy_rig):
    """Test SDF hand distances against nearest-point distances signed by winding numbers"""
    entry = next(e for e in tiny_corpus.entries if e.verb == "lift")
    posed = pose_sequence(entry.features, entry.root, toy_rig)
    grid = object_sdf(entry.object_mesh)
    frame = entry.meta["phases"]["contact"][0]
    local = posed.to_object_frame(posed.human_vertices(toy_rig, frame, (LEFT_HAND, RIGHT_HAND)), frame)
    exact = nearest_points(local, entry.object_mesh).distances
    exact = np.where(inside_by_winding(local, entry.object_mesh), -exact, exact)
    got = hand_signed_distances(posed, toy_rig, grid, frame)
    _, clamped = query_sdf(grid, local)
    assert (~clamped).any()
    np.testing.assert_allclose(got[~clamped], exact[~clamped], atol=grid.cell_diagonal)


def test_ground_truth_grasp_metrics(tiny_corpus, toy_rig):
    """Test penetration and floating of a scripted lift"""
    entry = next(e for e in tiny_corpus.entries if e.verb == "lift")
    grasp = penetration_floating(entry.features, entry.root, toy_rig, entry.object_mesh, entry.meta["table_height"])
    assert grasp.penetration_frames + grasp.floating_frames > 0
    assert grasp.floating_mm <= 1.0 + 1e-6


def test_grasp_metrics_without_lift(tiny_corpus, toy_rig):
    """Test that frames with the object on the table are not scored"""
    entry = tiny_corpus.entries[0]
    grasp = penetration_floating(entry.features[:20], entry.root, toy_rig, entry.object_mesh, entry.meta["table_height"])
    assert grasp.to_dict() == {"penetration_mm": 0.0, "floating_mm": 0.0, "penetration_frames": 0, "floating_frames": 0}


def test_evaluate_ground_truth_corpus(tiny_corpus, toy_rig):
    """Test corpus means and the empty-corpus error"""
    payload = evaluate_corpus(tiny_corpus.split("test"), toy_rig)
    assert payload["mode"] == "ground-truth"
    assert payload["episodes"] == 3
    assert payload["chois"]["C_rec"] == pytest.approx(1.0)
    with pytest.raises(MetricError):
        evaluate_corpus(tiny_corpus.split("nothing"), toy_rig)


def test_classifier_file(tmp_path, tiny_corpus, toy_rig):
    """Test the input width, freezing and a saved classifier"""
    inputs = [sequence_features(e.features, e.root, toy_rig) for e in tiny_corpus.entries[:3]]
    assert inputs[0].shape == (len(tiny_corpus.entries[0].features), 3 * toy_rig.n_joints + 9)
    classifier = EmbedClassifier(["lift", "place", "pass"], inputs[0].shape[1], width=8)
    trace = classifier.fit(inputs, [e.verb for e in tiny_corpus.entries[:3]], steps=3)
    assert len(trace) == 3
    with pytest.raises(MetricError):
        classifier.fit(inputs, ["lift"] * 3)
    classifier.save(tmp_path / "clf.snap")
    loaded = EmbedClassifier.load(tmp_path / "clf.snap")
    np.testing.assert_array_equal(loaded.embed(inputs), classifier.embed(inputs))
    with pytest.raises(FileNotFoundError):
        EmbedClassifier.load(tmp_path / "none.snap")


def test_realism_of_ground_truth_against_itself(tiny_corpus, toy_rig):
    """Test that a corpus scored against itself has zero FID and AVE"""
    classifier = train_classifier(tiny_corpus, toy_rig, steps=5)
    generated = [(e.features, e.root, e.verb) for e in tiny_corpus.entries]
    metrics = evaluate_realism(classifier, tiny_corpus, generated, toy_rig)
    assert metrics.fid == pytest.approx(0.0, abs=1e-4)
    assert metrics.ave == 0.0
    assert 0.0 <= metrics.ira <= 1.0
    assert metrics.diversity > 0.0


def test_flatten_metrics():
    """Test nested groups, booleans and the seed"""
    flat = flatten_metrics({"mode": "x", "seed": 3, "ok": True, "phase1_objective": 1.5, "chois": {"T_s": None, "FS": 2}})
    assert flat == {"phase1_objective": 1.5, "FS": 2.0}


def test_aggregate_runs(tmp_path):
    """Test per-mode mean, sample std and count through duckdb"""
    dirs = [
        write_metrics(tmp_path / "a0", {"mode": "two-phase", "seed": 0, "grasp": {"penetration_mm": 1.0}}),
        write_metrics(tmp_path / "a1", {"mode": "two-phase", "seed": 1, "grasp": {"penetration_mm": 3.0}}),
        write_metrics(tmp_path / "b0", {"mode": "inference-only", "seed": 0, "grasp": {"penetration_mm": 5.0}}),
    ]
    summaries = aggregate_runs(dirs)
    assert [(s.mode, s.metric, s.count) for s in summaries] == [
        ("inference-only", "penetration_mm", 1),
        ("two-phase", "penetration_mm", 2),
    ]
    assert summaries[1].mean == pytest.approx(2.0)
    assert summaries[1].std == pytest.approx(np.sqrt(2.0))
    assert summaries[0].std == 0.0
    assert summary_table(summaries)[1] == {"mode": "two-phase", "penetration_mm": "2.00 ± 1.41"}
    path = export_table(summaries, tmp_path / "table.csv")
    assert path.read_text(encoding="utf-8").splitlines()[0] == "mode,penetration_mm"


def test_aggregate_rejects_incomplete_runs(tmp_path):
    """Test run directories without metrics or without a mode"""
    with pytest.raises(FileNotFoundError):
        aggregate_runs([tmp_path / "empty"])
    bad = write_metrics(tmp_path / "bad", {"seed": 0})
    with pytest.raises(ArtifactError):
        aggregate_runs([bad])

"""
Tests for the objective terms and the decoded state
"""

from dataclasses import replace

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from hoi_dno.config import DefaultsConfig
from hoi_dno.datasynth import build_scene
from hoi_dno.exceptions import ConfigError
from hoi_dno.geometry import TriMesh, inside_by_winding, nearest_points, penetration_loss
from hoi_dno.losses import (
    GoalSpec,
    LossWeights,
    decode_state,
    loss_contact,
    loss_feet_floor_contact,
    loss_foot,
    loss_goal,
    loss_human,
    loss_human_penetration,
    loss_jitter,
    loss_object,
    loss_static,
    non_contact_intervals,
)
from hoi_dno.numerics import Tape, Tensor, backward
from hoi_dno.representation import FeatureLayout, RootTransform, decode_features
from hoi_dno.rig import LEFT_HAND, REGIONS, RIGHT_HAND, rest_region_mesh
from tests.helpers import assert_grads_match


def still_object(n, translation=(0.0, 0.4, 0.9)):
    return Tensor(np.tile(np.eye(3), (n, 1, 1))), Tensor(np.tile(np.asarray(translation), (n, 1)))


def entry_window(entry, rig, start, stop):
    """Features of frames [start, stop) of a corpus entry and the root of their first frame"""
    tracks = decode_features(entry.features, entry.root, rig)
    root = RootTransform(rotation=tracks.human.rotations[start, 0], translation=tracks.human.root_translation[start])
    return entry.features[start:stop], root


def pushed_window(entry, rig, depth=0.01):
    """Three contact frames with the object moved by depth towards the engaged hand"""
    start = entry.meta["phases"]["contact"][0]
    features, root = entry_window(entry, rig, start, start + 3)
    state = decode_state(features, root, rig, meshes=False)
    n_left = len(rig.left_anchors)
    bits = state.binary_bits()[0]
    hand = slice(0, n_left) if bits[:n_left].any() else slice(n_left, None)
    toward = state.anchors.data[0, hand].mean(axis=0) - state.object_translations.data[0]
    pushed = features.copy()
    pushed[:, FeatureLayout.for_rig(rig).object_translation] += depth * toward / np.linalg.norm(toward)
    return pushed, root


def dense_penetration(points, faces, target_vertices):
    """One penetration direction per frame with winding-number membership and exhaustive nearest points"""
    total = 0.0
    for p, v in zip(points, target_vertices):
        mesh = TriMesh.unchecked(v, faces, watertight=True)
        inside = inside_by_winding(p, mesh)
        if inside.any():
            total += float(np.sum(nearest_points(p[inside], mesh).distances ** 2))
    return total / (points.shape[0] * points.shape[1])


def test_goal_term_values():
    """Test translation and rotation errors at the keyframes"""
    R, t = still_object(5)
    exact = GoalSpec(frames=[0, 4], translations=t.data[[0, 4]])
    assert loss_goal(R, t, exact).item() == pytest.approx(0.0, abs=1e-12)

    shifted = GoalSpec(frames=[2], translations=t.data[[2]] + [0.1, 0.0, 0.0])
    assert loss_goal(R, t, shifted).item() == pytest.approx(0.01)

    turned = GoalSpec(frames=[1], translations=t.data[[1]], rotations=Rotation.from_euler("z", [0.3]).as_matrix())
    assert loss_goal(R, t, turned).item() == pytest.approx(0.09, rel=1e-6)


def test_goal_term_without_keyframes():
    """Test that an empty goal set contributes nothing"""
    R, t = still_object(3)
    assert loss_goal(R, t, GoalSpec()).item() == 0.0
    assert loss_goal(R, t, None).item() == 0.0


def test_goal_frames_must_fit():
    """Test keyframes outside the sequence"""
    R, t = still_object(3)
    with pytest.raises(ValueError):
        loss_goal(R, t, GoalSpec(frames=[3]))


def test_goal_spec_dict_form():
    """Test the JSON-friendly goal description"""
    goals = GoalSpec(frames=[1, 5], translations=np.ones((2, 3)))
    again = GoalSpec.from_dict(goals.to_dict())
    assert again.frames == [1, 5]
    np.testing.assert_array_equal(again.rotations, np.tile(np.eye(3), (2, 1, 1)))


def test_non_contact_intervals():
    """Test runs of frames without any active anchor"""
    bits = np.array([[0, 0], [1, 0], [0, 0], [0, 0], [0, 1], [0, 0]], dtype=float)
    assert non_contact_intervals(bits) == [(0, 1), (2, 4), (5, 6)]
    assert non_contact_intervals(np.ones((3, 2))) == []


def test_static_term_ignores_motion_in_contact():
    """Test that the object may move only while held"""
    R, _ = still_object(4)
    t = np.zeros((4, 3))
    t[2:, 0] = 0.2
    held = np.array([[0], [0], [1], [1]], dtype=float)
    assert loss_static(R, Tensor(t), held).item() == pytest.approx(0.0)
    free = np.zeros((4, 1))
    # frames 2 and 3 are 0.2 m from frame 0
    assert loss_static(R, Tensor(t), free).item() == pytest.approx(2 * 0.04 / 4)


def test_contact_term_averages_active_pairs():
    """Test the masked mean of squared anchor-target distances"""
    anchors = Tensor(np.zeros((2, 2, 3)))
    targets = np.zeros((2, 2, 3))
    targets[0, 0] = [0.3, 0.0, 0.0]
    targets[1, 1] = [0.0, 0.0, 5.0]
    mask = np.array([[True, False], [False, False]])
    assert loss_contact(anchors, targets, mask).item() == pytest.approx(0.09)
    assert loss_contact(anchors, targets, np.zeros((2, 2), dtype=bool)).item() == 0.0


def test_contact_term_gradient():
    """Test the contact gradient with respect to anchors"""
    targets = np.random.default_rng(0).normal(size=(3, 4, 3))
    mask = np.random.default_rng(1).random((3, 4)) > 0.4
    anchors = np.random.default_rng(2).normal(size=(3, 4, 3))
    assert_grads_match(lambda a: loss_contact(a, targets, mask), anchors)


def test_foot_term_gates_on_height():
    """Test that only grounded toes are penalized for sliding"""
    joints = np.zeros((3, 2, 3))
    joints[:, 0, 0] = [0.0, 0.1, 0.2]
    joints[:, 1, 2] = 0.5
    joints[:, 1, 0] = [0.0, 1.0, 2.0]
    assert loss_foot(Tensor(joints), (0, 1)).item() == pytest.approx(0.01)
    joints[:, 0, 2] = 0.5
    assert loss_foot(Tensor(joints), (0, 1)).item() == 0.0


def test_jitter_term_is_zero_for_constant_velocity():
    """Test the second-difference penalty"""
    positions = np.linspace(0.0, 1.0, 5)[:, None, None] * np.ones((5, 2, 3))
    assert loss_jitter(Tensor(positions)).item() == pytest.approx(0.0, abs=1e-20)
    positions[2] += 0.1
    assert loss_jitter(Tensor(positions)).item() > 0.0


def test_feet_floor_contact_term():
    """Test |min toe height - h| averaged over frames"""
    joints = np.zeros((2, 2, 3))
    joints[:, 0, 2] = [0.02, 0.12]
    joints[:, 1, 2] = [0.5, 0.5]
    assert loss_feet_floor_contact(Tensor(joints), (0, 1)).item() == pytest.approx(0.05)


def test_weights_validation():
    """Test negative and unknown weights"""
    with pytest.raises(ConfigError):
        LossWeights(contact=-1.0)
    with pytest.raises(ConfigError) as exc:
        LossWeights.from_dict({"bogus": 1.0})
    assert exc.value.key_path == "weights.bogus"
    assert LossWeights.grab().scaled(goal=0.0).goal == 0.0


def test_object_terms_vanish_on_ground_truth(tiny_corpus, toy_rig):
    """Test that a scripted episode satisfies its own object objective"""
    entry = tiny_corpus.entries[0]
    state = decode_state(entry.features, entry.root, toy_rig, human=False)
    frames = [10, len(state) - 1]
    goals = GoalSpec(
        frames=frames,
        translations=state.object_translations.data[frames],
        rotations=state.object_rotations.data[frames],
    )
    scene = build_scene(entry.meta["table_height"])
    total, breakdown = loss_object(state, entry.object_mesh, scene, goals, LossWeights.grab())
    assert set(breakdown.terms) == {"pen_object_scene", "goal", "static"}
    assert breakdown.total == pytest.approx(0.0, abs=1e-8)


def test_human_terms_on_ground_truth_contact(tiny_corpus, toy_rig):
    """Test that held anchors sit on their contact targets"""
    entry = tiny_corpus.entries[1]
    start = entry.meta["phases"]["contact"][0]
    features, root = entry_window(entry, toy_rig, start, start + 4)
    state = decode_state(features, root, toy_rig)
    mask = state.binary_bits() > 0.5
    scene = build_scene(entry.meta["table_height"])
    _, breakdown = loss_human(state, toy_rig, entry.object_mesh, scene, LossWeights.grab(), state.contact_targets().data, mask)
    assert mask.any()
    assert breakdown.terms["contact"] <= DefaultsConfig.CONTACT_LABEL_DISTANCE**2 + 1e-9
    assert {"pen_human_object", "pen_human_scene", "pen_human_human", "foot", "jitter"} <= set(breakdown.terms)
    assert "feet_floor_contact" not in breakdown.terms


def test_contact_gradient_reaches_features(tiny_corpus, toy_rig):
    """Test a directional derivative of the contact term through decoding and kinematics"""
    entry = tiny_corpus.entries[2]
    start = entry.meta["phases"]["contact"][0]
    features, root = entry_window(entry, toy_rig, start, start + 3)
    base = decode_state(features, root, toy_rig, meshes=False)
    mask = base.binary_bits() > 0.5
    targets = base.contact_targets().data + 0.01

    def contact(x):
        return loss_contact(decode_state(x, root, toy_rig, meshes=False).anchors, targets, mask)

    leaf = Tensor(features, requires_grad=True)
    with Tape():
        grad = backward(contact(leaf))[leaf]
    direction = np.random.default_rng(3).normal(size=features.shape) * 1e-3
    eps = 1e-4
    numeric = (contact(Tensor(features + eps * direction)).item() - contact(Tensor(features - eps * direction)).item()) / (2 * eps)
    assert float((grad * direction).sum()) == pytest.approx(numeric, rel=1e-4, abs=1e-10)


def test_object_pushed_into_hand_matches_dense_penetration(tiny_corpus, toy_rig):
    """Test the human-object penetration term of an object pushed 1 cm into the hand against a dense oracle"""
    entry = tiny_corpus.entries[1]
    features, root = pushed_window(entry, toy_rig)
    state = decode_state(features, root, toy_rig)
    scene = build_scene(entry.meta["table_height"])
    got = loss_human_penetration(state, toy_rig, entry.object_mesh, scene, which=("ho",))["pen_human_object"].item()

    obj_v = state.object_vertices(entry.object_mesh).data
    expected = 0.0
    for region in REGIONS:
        verts = state.meshes.vertices(region).data
        expected += dense_penetration(verts, entry.object_mesh.faces, obj_v)
        expected += dense_penetration(obj_v, state.meshes.faces[region], verts)
    assert got > 0.0
    assert got == pytest.approx(expected, rel=1e-6)


def test_overlapping_hands_penetrate_symmetrically(tiny_corpus, toy_rig):
    """Test that hands slid onto each other penetrate and that the value does not depend on hand order"""
    entry = tiny_corpus.entries[1]
    start = entry.meta["phases"]["contact"][0]
    features, root = entry_window(entry, toy_rig, start, start + 2)
    state = decode_state(features, root, toy_rig)
    left = state.meshes.left_hand.data
    right = state.meshes.right_hand.data
    right = right - right.mean(axis=1, keepdims=True) + left.mean(axis=1, keepdims=True) + np.array([0.0, 0.0, 0.004])
    state = replace(state, meshes=replace(state.meshes, right_hand=Tensor(right)))
    scene = build_scene(entry.meta["table_height"])
    hh = loss_human_penetration(state, toy_rig, entry.object_mesh, scene, which=("hh",))["pen_human_human"].item()

    left_mesh = rest_region_mesh(toy_rig, LEFT_HAND)
    right_mesh = rest_region_mesh(toy_rig, RIGHT_HAND)
    swapped = penetration_loss(right_mesh, left_mesh, vertices_a=right, vertices_b=left).item()
    assert hh > 0.0
    assert swapped == pytest.approx(hh, rel=1e-9)


def test_human_objective_gradient_wrt_pose(tiny_corpus, toy_rig):
    """Test a directional derivative of the human objective along the joint rotation channels"""
    entry = tiny_corpus.entries[1]
    features, root = pushed_window(entry, toy_rig, depth=0.005)
    base = decode_state(features, root, toy_rig, meshes=False)
    mask = base.binary_bits() > 0.5
    targets = base.contact_targets().data + 0.002
    scene = build_scene(entry.meta["table_height"])
    weights = LossWeights.grab()

    def objective(x):
        return loss_human(decode_state(x, root, toy_rig), toy_rig, entry.object_mesh, scene, weights, targets, mask)[0]

    leaf = Tensor(features, requires_grad=True)
    with Tape():
        grad = backward(objective(leaf))[leaf]
    rotations = FeatureLayout.for_rig(toy_rig).rotations
    direction = np.zeros_like(features)
    direction[:, rotations] = np.random.default_rng(4).normal(size=direction[:, rotations].shape) * 1e-3
    eps = 1e-4
    numeric = (objective(Tensor(features + eps * direction)).item() - objective(Tensor(features - eps * direction)).item()) / (2 * eps)
    assert float((grad * direction).sum()) == pytest.approx(numeric, rel=1e-4, abs=1e-10)

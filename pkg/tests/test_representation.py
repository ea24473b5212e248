"""
Tests for the feature layout, encoding, contacts, normalization and sequence files
"""

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from hoi_dno.exceptions import ArtifactError, EncodingError
from hoi_dno.numerics import Tensor
from hoi_dno.representation import (
    ContactFrame,
    FeatureLayout,
    FeatureNormalizer,
    HumanTrack,
    ObjectTrack,
    RootTransform,
    WorldTracks,
    contact_targets,
    contact_targets_tensor,
    count_flips,
    decode_features,
    decode_human,
    decode_sequence,
    encode_features,
    encode_sequence,
    joints_from_features,
    load_sequence,
    roundtrip_check,
    save_sequence,
    threshold_contacts,
)
from hoi_dno.rig import forward_kinematics_np


def random_tracks(rig, n=12, seed=0):
    rng = np.random.default_rng(seed)
    local = Rotation.from_rotvec(rng.normal(scale=0.3, size=(n * rig.n_joints, 3))).as_matrix()
    local = local.reshape(n, rig.n_joints, 3, 3)
    yaw = np.cumsum(rng.normal(scale=0.2, size=n))
    local[:, 0] = Rotation.from_euler("z", yaw).as_matrix() @ local[:, 0]
    root = np.cumsum(rng.normal(scale=0.02, size=(n, 3)), axis=0) + np.array(rig.rest_root)
    human = HumanTrack(root_translation=root, rotations=local)
    obj = ObjectTrack(
        rotations=Rotation.random(n, random_state=seed).as_matrix(),
        translations=rng.normal(size=(n, 3)),
    )
    contacts = ContactFrame(
        bits=(rng.random((n, rig.n_anchors)) > 0.5).astype(float),
        points=rng.normal(scale=0.1, size=(n, rig.n_anchors, 3)),
    )
    return WorldTracks(human=human, obj=obj, contacts=contacts)


def root_of(tracks, frame=0):
    return RootTransform(rotation=tracks.human.rotations[frame, 0], translation=tracks.human.root_translation[frame])


def test_layout_widths(toy_rig, omomo_rig):
    """Test D = 4A + 4 + 9J + 12 and that the blocks tile the feature vector"""
    assert FeatureLayout.for_rig(toy_rig).dim == 324
    layout = FeatureLayout.for_rig(omomo_rig)
    assert layout.dim == 204
    blocks = layout.blocks()
    assert blocks["cp"].stop == blocks["human"].start
    assert blocks["human"].stop == blocks["object"].start
    assert blocks["object"].stop == layout.dim
    with pytest.raises(EncodingError):
        layout.check(203)


def test_decode_inverts_encode(omomo_rig):
    """Test that decoding features from the first root recovers the world tracks"""
    tracks = random_tracks(omomo_rig)
    decoded = decode_features(encode_features(tracks, omomo_rig), root_of(tracks), omomo_rig)
    np.testing.assert_allclose(decoded.human.root_translation, tracks.human.root_translation, atol=1e-9)
    np.testing.assert_allclose(decoded.human.rotations, tracks.human.rotations, atol=1e-9)
    np.testing.assert_allclose(decoded.obj.rotations, tracks.obj.rotations, atol=1e-9)
    np.testing.assert_array_equal(decoded.contacts.bits, tracks.contacts.bits)


def test_joint_channels_match_kinematics(omomo_rig):
    """Test that joint positions recovered from features equal FK of the tracks"""
    tracks = random_tracks(omomo_rig, seed=1)
    features = encode_features(tracks, omomo_rig)
    expected, _ = forward_kinematics_np(omomo_rig, tracks.human.root_translation, tracks.human.rotations)
    np.testing.assert_allclose(joints_from_features(features, root_of(tracks), omomo_rig), expected, atol=1e-9)


def test_differentiable_decode_matches_numpy(omomo_rig):
    """Test the tensor human decoder against the numpy decoder"""
    tracks = random_tracks(omomo_rig, seed=2)
    features = encode_features(tracks, omomo_rig)
    t, rotations = decode_human(Tensor(features), root_of(tracks), FeatureLayout.for_rig(omomo_rig))
    np.testing.assert_allclose(t.data, tracks.human.root_translation, atol=1e-9)
    np.testing.assert_allclose(rotations.data, tracks.human.rotations, atol=1e-9)


def test_single_frame_cannot_be_encoded(omomo_rig):
    """Test that velocities need two frames"""
    tracks = random_tracks(omomo_rig, n=2)
    one = WorldTracks(
        human=HumanTrack(tracks.human.root_translation[:1], tracks.human.rotations[:1]),
        obj=ObjectTrack(tracks.obj.rotations[:1], tracks.obj.translations[:1]),
        contacts=ContactFrame(tracks.contacts.bits[:1], tracks.contacts.points[:1]),
    )
    with pytest.raises(EncodingError):
        encode_features(one, omomo_rig)


def test_segments_stitch_back(omomo_rig):
    """Test overlapping segments and their stitching"""
    tracks = random_tracks(omomo_rig, n=13, seed=3)
    segments = encode_sequence(tracks, omomo_rig, segment_length=5, overlap=1)
    assert [len(s) for s in segments] == [5, 5, 5]
    assert [s.overlap for s in segments] == [0, 1, 1]
    np.testing.assert_allclose(segments[1].root.translation, tracks.human.root_translation[4])
    stitched = decode_sequence(segments, omomo_rig)
    np.testing.assert_allclose(stitched.human.root_translation, tracks.human.root_translation, atol=1e-9)


def test_bad_segment_arguments(omomo_rig):
    """Test segment lengths beyond the episode and overlaps outside [0, L)"""
    tracks = random_tracks(omomo_rig, n=6)
    with pytest.raises(EncodingError):
        encode_sequence(tracks, omomo_rig, segment_length=7)
    with pytest.raises(EncodingError):
        encode_sequence(tracks, omomo_rig, segment_length=3, overlap=3)


def test_threshold_ties_go_to_no_contact():
    """Test contact thresholding at exactly tau"""
    contacts = ContactFrame(bits=np.array([[0.5, 0.51, 0.2]]), points=np.zeros((1, 3, 3)))
    np.testing.assert_array_equal(threshold_contacts(contacts).bits, [[0.0, 1.0, 0.0]])
    with pytest.raises(ValueError):
        threshold_contacts(contacts, tau=1.0)


def test_count_flips():
    """Test the Hamming distance of thresholded contact matrices"""
    assert count_flips(np.array([[0.9, 0.1], [0.2, 0.7]]), np.array([[0.6, 0.8], [0.1, 0.3]])) == 2


def test_contact_targets_follow_object():
    """Test that contact targets are the object-posed contact points"""
    points = np.array([[[0.1, 0.0, 0.0], [0.0, 0.2, 0.0]]])
    contacts = ContactFrame(bits=np.array([[1.0, 0.0]]), points=points)
    R = Rotation.from_euler("z", 90, degrees=True).as_matrix()[None]
    t = np.array([[1.0, 2.0, 3.0]])
    targets, active = contact_targets(contacts, R, t)
    np.testing.assert_allclose(targets[0, 0], [1.0, 2.1, 3.0], atol=1e-12)
    np.testing.assert_array_equal(active, [[True, False]])
    np.testing.assert_allclose(contact_targets_tensor(points, R, t).data, targets, atol=1e-12)


def test_normalizer_floors_constant_channels():
    """Test the std floor and the normalize/denormalize pair"""
    data = [np.column_stack([np.arange(4.0), np.full(4, 2.0)])]
    normalizer = FeatureNormalizer.fit(data)
    assert normalizer.std[1] > 0.0
    x = np.array([[1.5, 2.0]])
    np.testing.assert_allclose(normalizer.denormalize(normalizer.normalize(x)), x)
    restored = FeatureNormalizer.from_tensors(normalizer.to_tensors())
    np.testing.assert_array_equal(restored.mean, normalizer.mean)
    with pytest.raises(EncodingError):
        FeatureNormalizer.from_tensors({})


def test_sequence_file(tmp_path, toy_rig, omomo_rig):
    """Test writing, reading and byte-exact re-encoding of a sequence file"""
    tracks = random_tracks(omomo_rig, seed=4)
    features = encode_features(tracks, omomo_rig)
    path = tmp_path / "episode.seq"
    save_sequence(path, features, root_of(tracks), omomo_rig, object_mesh="box.obj", meta={"prompt": "lift box"})
    seq = roundtrip_check(path, rig=omomo_rig)
    np.testing.assert_array_equal(seq.features, features)
    assert seq.header["meta"]["prompt"] == "lift box"
    assert seq.header["object_mesh"] == "box.obj"
    with pytest.raises(ArtifactError):
        load_sequence(path, rig=toy_rig)


def test_damaged_sequence_files(tmp_path, omomo_rig):
    """Test bad magic and truncated payloads"""
    tracks = random_tracks(omomo_rig, seed=5)
    path = tmp_path / "episode.seq"
    save_sequence(path, encode_features(tracks, omomo_rig), root_of(tracks), omomo_rig)
    raw = path.read_bytes()
    (tmp_path / "short.seq").write_bytes(raw[:-10])
    (tmp_path / "magic.seq").write_bytes(b"XXXX" + raw[4:])
    for name in ("short.seq", "magic.seq"):
        with pytest.raises(ArtifactError):
            load_sequence(tmp_path / name)
    with pytest.raises(FileNotFoundError):
        load_sequence(tmp_path / "absent.seq")


def test_save_rejects_wrong_width(tmp_path, omomo_rig):
    """Test that features must match the rig layout"""
    with pytest.raises(EncodingError):
        save_sequence(tmp_path / "x.seq", np.zeros((3, 10)), RootTransform.identity(), omomo_rig)

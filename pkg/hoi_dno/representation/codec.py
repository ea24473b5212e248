"""
World tracks <-> feature sequences

Human motion is encoded relative to the root: the root heading alpha (yaw of
the forward axis) is split off the root rotation, planar root velocity is
expressed in the heading frame, and joint positions are stored relative to the
root's floor projection in that frame. Velocities are forward differences in
units per frame; the last frame repeats the previous value. Decoding
integrates them back from the first frame's root transform.
"""

import logging
from typing import List, Optional, Tuple

import numpy as np

from ..exceptions import EncodingError
from ..numerics import Tensor, as_tensor
from ..numerics import primitives as P
from ..rig import RigDef, forward_kinematics_np
from ..rig.rotations import (
    cont6d_to_rotmat,
    cont6d_to_rotmat_np,
    heading_np,
    rot_z,
    rot_z_np,
    rotmat_to_cont6d_np,
    wrap_angle,
)
from .layout import FeatureLayout
from .models import ContactFrame, HumanTrack, ObjectTrack, RootTransform, Segment, WorldTracks

logger = logging.getLogger(__name__)


def _forward_difference(x: np.ndarray) -> np.ndarray:
    d = np.empty_like(x)
    d[:-1] = x[1:] - x[:-1]
    d[-1] = d[-2]
    return d


def encode_features(tracks: WorldTracks, rig: RigDef) -> np.ndarray:
    """
    Per-frame features (N, D) of time-aligned world tracks

    Raises:
        EncodingError: fewer than 2 frames or widths inconsistent with the rig
    """
    n = len(tracks)
    if n < 2:
        raise EncodingError(f"need at least 2 frames to encode, got {n}")
    layout = FeatureLayout.for_rig(rig)
    human, obj, contacts = tracks.human, tracks.obj, tracks.contacts
    if human.rotations.shape[1] != rig.n_joints:
        raise EncodingError(f"human track has {human.rotations.shape[1]} joints, rig has {rig.n_joints}")
    if contacts.n_anchors != rig.n_anchors:
        raise EncodingError(f"contact track has {contacts.n_anchors} anchors, rig has {rig.n_anchors}")

    out = np.zeros((n, layout.dim))
    out[:, layout.contact_points] = contacts.points.reshape(n, -1)
    out[:, layout.contact_bits] = contacts.bits

    root_R = human.rotations[:, 0]
    alpha = heading_np(root_R)
    to_heading = rot_z_np(-alpha)
    tilt = to_heading @ root_R
    t = human.root_translation

    step = _forward_difference(t)
    planar = np.einsum("nij,nj->ni", to_heading, step)[:, :2]
    alpha_dot = _forward_difference(alpha)
    alpha_dot[:-1] = wrap_angle(alpha_dot[:-1])
    alpha_dot[-1] = alpha_dot[-2]

    theta = rotmat_to_cont6d_np(human.rotations)
    theta[:, 0] = rotmat_to_cont6d_np(tilt)

    positions, _ = forward_kinematics_np(rig, t, human.rotations)
    floor = t * np.array([1.0, 1.0, 0.0])
    rel = np.einsum("nij,nkj->nki", to_heading, positions - floor[:, None, :])

    out[:, layout.root_height] = t[:, 2]
    out[:, layout.root_velocity] = planar
    out[:, layout.root_angular_velocity] = alpha_dot
    out[:, layout.rotations] = theta.reshape(n, -1)
    out[:, layout.joints] = rel.reshape(n, -1)

    out[:, layout.object_rotation] = rotmat_to_cont6d_np(obj.rotations)
    out[:, layout.object_translation] = obj.translations
    out[:, layout.object_velocity] = _forward_difference(obj.translations)
    return out


def decode_features(features: np.ndarray, root: RootTransform, rig: RigDef, fps: int = 30) -> WorldTracks:
    """Inverse of encode_features given the first frame's root transform"""
    layout = FeatureLayout.for_rig(rig)
    features = np.asarray(features, dtype=np.float64)
    layout.check(features.shape[-1])
    n = len(features)

    alpha0 = heading_np(root.rotation)
    alpha_dot = features[:, layout.root_angular_velocity]
    alpha = alpha0 + np.concatenate([[0.0], np.cumsum(alpha_dot[:-1])])
    heading = rot_z_np(alpha)

    planar = np.zeros((n, 3))
    planar[:, :2] = features[:, layout.root_velocity]
    world_step = np.einsum("nij,nj->ni", heading, planar)
    xy = root.translation[:2] + np.concatenate([np.zeros((1, 3)), np.cumsum(world_step[:-1], axis=0)])[:, :2]
    t = np.column_stack([xy, features[:, layout.root_height]])

    theta = features[:, layout.rotations].reshape(n, rig.n_joints, 6)
    rotations = cont6d_to_rotmat_np(theta)
    rotations[:, 0] = heading @ rotations[:, 0]

    obj = ObjectTrack(
        rotations=cont6d_to_rotmat_np(features[:, layout.object_rotation]),
        translations=features[:, layout.object_translation].copy(),
    )
    contacts = ContactFrame(
        bits=features[:, layout.contact_bits].copy(),
        points=features[:, layout.contact_points].reshape(n, rig.n_anchors, 3),
    )
    return WorldTracks(human=HumanTrack(root_translation=t, rotations=rotations), obj=obj, contacts=contacts, fps=fps)


def joints_from_features(features: np.ndarray, root: RootTransform, rig: RigDef) -> np.ndarray:
    """World joint positions (N, J, 3) recovered from the j channels"""
    layout = FeatureLayout.for_rig(rig)
    tracks = decode_features(features, root, rig)
    alpha = heading_np(tracks.human.rotations[:, 0])
    rel = features[:, layout.joints].reshape(len(features), rig.n_joints, 3)
    floor = tracks.human.root_translation * np.array([1.0, 1.0, 0.0])
    return np.einsum("nij,nkj->nki", rot_z_np(alpha), rel) + floor[:, None, :]


def encode_sequence(
    tracks: WorldTracks,
    rig: RigDef,
    segment_length: Optional[int] = None,
    overlap: int = 0,
) -> List[Segment]:
    """
    Split an episode into feature segments

    Args:
        tracks: World tracks (>= 2 frames)
        rig: Rig the human track is posed on
        segment_length: Frames per segment (whole episode when None)
        overlap: Leading frames a segment shares with its predecessor

    Returns:
        Segments whose root is the world root transform at their first frame
    """
    features = encode_features(tracks, rig)
    n = len(features)
    length = segment_length or n
    if length > n:
        raise EncodingError(f"segment length {length} exceeds episode length {n}")
    if not 0 <= overlap < length:
        raise EncodingError(f"overlap {overlap} must be in [0, {length})")
    stride = length - overlap
    segments = []
    for start in range(0, n - length + 1, stride):
        root = RootTransform(
            rotation=tracks.human.rotations[start, 0].copy(),
            translation=tracks.human.root_translation[start].copy(),
        )
        segments.append(Segment(features=features[start:start + length].copy(), root=root, overlap=overlap if start else 0))
    covered = (len(segments) - 1) * stride + length
    if covered < n:
        logger.debug("encode_sequence dropped %d trailing frames", n - covered)
    return segments


def decode_sequence(
    segments: List[Segment],
    rig: RigDef,
    initial_root: Optional[RootTransform] = None,
    fps: int = 30,
) -> WorldTracks:
    """Stitch segments (dropping overlapping frames) and decode from the initial root"""
    if not segments:
        raise EncodingError("decode_sequence needs at least one segment")
    parts = [segments[0].features] + [s.features[s.overlap:] for s in segments[1:]]
    return decode_features(np.concatenate(parts), initial_root or segments[0].root, rig, fps=fps)


# ----------------------------------------------------------------------
# Differentiable decode
# ----------------------------------------------------------------------

def _exclusive_cumsum(x: Tensor) -> Tensor:
    return P.cumsum(x, axis=0) - x


def decode_human(
    features: Tensor,
    root: RootTransform,
    layout: FeatureLayout,
    check: bool = True,
) -> Tuple[Tensor, Tensor]:
    """
    Root translations (L, 3) and rotations (L, J, 3, 3) from (L, D) features

    Row 0 of the rotations is the global root rotation, as consumed by
    forward_kinematics_rotmats.
    """
    features = as_tensor(features)
    layout.check(features.shape[-1])
    n = features.shape[0]

    alpha_dot = features[:, layout.root_angular_velocity]
    alpha = _exclusive_cumsum(alpha_dot) + float(heading_np(root.rotation))
    c, s = P.cos(alpha), P.sin(alpha)
    vx = features[:, layout.root_velocity.start]
    vy = features[:, layout.root_velocity.start + 1]
    x = _exclusive_cumsum(c * vx - s * vy) + float(root.translation[0])
    y = _exclusive_cumsum(s * vx + c * vy) + float(root.translation[1])
    t = P.stack([x, y, features[:, layout.root_height]], axis=-1)

    theta = features[:, layout.rotations].reshape(n, layout.n_joints, 6)
    local = cont6d_to_rotmat(theta, check=check)
    root_R = P.matmul(rot_z(alpha), local[:, 0])
    rotations = P.concat([root_R.reshape(n, 1, 3, 3), local[:, 1:]], axis=1)
    return t, rotations


def decode_object(features: Tensor, layout: FeatureLayout, check: bool = True) -> Tuple[Tensor, Tensor]:
    """Object rotations (L, 3, 3) and translations (L, 3)"""
    features = as_tensor(features)
    return cont6d_to_rotmat(features[:, layout.object_rotation], check=check), features[:, layout.object_translation]


def decode_contacts(features: Tensor, layout: FeatureLayout) -> Tuple[Tensor, Tensor]:
    """Contact bits (L, A) and rest-frame points (L, A, 3)"""
    features = as_tensor(features)
    n = features.shape[0]
    return features[:, layout.contact_bits], features[:, layout.contact_points].reshape(n, layout.n_anchors, 3)

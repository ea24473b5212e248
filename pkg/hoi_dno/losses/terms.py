"""
Objective terms

Every term returns a scalar Tensor and is differentiable through the decoded
state. Object-centric terms read only the contact and object channels;
human-centric terms additionally read the joint transforms and skinned meshes.

Term summary:
    goal       mean over keyframes of ||t_hat - t||^2 + theta(R_hat^T R)^2
    static     per non-contact interval, drift from the interval's first frame
    contact    mean squared anchor-target distance over active pairs
    foot       mean squared planar toe velocity on frames with toe z < 2h
    jitter     mean squared second difference of joint positions
    feet_floor mean over frames of |min(z_l, z_r) - h|
"""

import logging
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..config import DefaultsConfig
from ..geometry import TriMesh, penetration_loss, penetration_term
from ..numerics import Tensor, as_tensor
from ..numerics import primitives as P
from ..rig import LEFT_HAND, REGIONS, RIGHT_HAND, RigDef, rest_region_mesh
from .models import GoalSpec, LossBreakdown, LossWeights, Scene
from .state import DecodedState

logger = logging.getLogger(__name__)


def _zero() -> Tensor:
    return Tensor(0.0)


def _sq_norm(x: Tensor) -> Tensor:
    return (x * x).sum(axis=-1)


# ----------------------------------------------------------------------
# Object-centric terms
# ----------------------------------------------------------------------

def loss_goal(rotations: Tensor, translations: Tensor, goals: Optional[GoalSpec]) -> Tensor:
    """
    Keyframe pose error of the object

    Args:
        rotations: (L, 3, 3) object rotations
        translations: (L, 3) object translations
        goals: Keyframes with target poses

    Returns:
        Scalar; 0 with a warning when there are no keyframes
    """
    if goals is None or len(goals) == 0:
        logger.warning("empty goal set, goal term is 0")
        return _zero()
    goals.check(translations.shape[0])
    frames = np.asarray(goals.frames, dtype=np.int64)
    t = translations[frames]
    R = rotations[frames]
    position = _sq_norm(t - Tensor._wrap(goals.translations))
    relative = P.matmul(Tensor._wrap(np.swapaxes(goals.rotations, -1, -2)), R)
    angle = P.rotation_geodesic_sq(relative)
    return (position + angle).mean()


def non_contact_intervals(bits: np.ndarray) -> List[Tuple[int, int]]:
    """Half-open [start, end) runs of frames where no anchor is in contact"""
    free = ~(np.asarray(bits) > 0.5).any(axis=1)
    intervals, start = [], None
    for f, is_free in enumerate(free):
        if is_free and start is None:
            start = f
        elif not is_free and start is not None:
            intervals.append((start, f))
            start = None
    if start is not None:
        intervals.append((start, len(free)))
    return intervals


def loss_static(rotations: Tensor, translations: Tensor, bits: np.ndarray) -> Tensor:
    """
    Object drift over contiguous non-contact intervals

    Each frame of an interval is compared with the interval's first frame;
    the sum is divided by the total number of non-contact frames.
    """
    intervals = non_contact_intervals(bits)
    if not intervals:
        return _zero()
    frames, anchors = [], []
    for start, end in intervals:
        frames.extend(range(start, end))
        anchors.extend([start] * (end - start))
    frames_idx = np.asarray(frames, dtype=np.int64)
    anchor_idx = np.asarray(anchors, dtype=np.int64)
    position = _sq_norm(translations[frames_idx] - translations[anchor_idx])
    relative = P.matmul(rotations[anchor_idx].swap_last(), rotations[frames_idx])
    angle = P.rotation_geodesic_sq(relative)
    return (position + angle).sum() / float(len(frames))


def loss_object_scene(object_vertices: Tensor, object_mesh: TriMesh, scene: Scene, seed: int = 0) -> Tensor:
    """Bidirectional object-scene penetration, summed over the scene meshes"""
    n = object_vertices.shape[0]
    total = _zero()
    for k, static in enumerate(scene.object_meshes):
        into_scene = penetration_term(object_vertices, static, bvh=static.bvh(), seed=seed + k)
        scene_points = np.broadcast_to(static.vertices, (n,) + static.vertices.shape)
        into_object = penetration_term(scene_points, object_mesh, target_vertices=object_vertices, seed=seed + 101 + k)
        total = total + into_scene + into_object
    return total


def loss_object(
    state: DecodedState,
    object_mesh: TriMesh,
    scene: Scene,
    goals: Optional[GoalSpec],
    weights: LossWeights,
    bits: Optional[np.ndarray] = None,
    seed: int = 0,
) -> Tuple[Tensor, LossBreakdown]:
    """
    Object-centric objective

    Args:
        state: Decoded state (human channels unused)
        object_mesh: Rest-pose object mesh
        scene: Static scene
        goals: Object keyframes (may be empty)
        weights: Term weights
        bits: Binary contacts segmenting the static term; thresholded from
            the state when omitted
        seed: Ray seed of the penetration terms

    Returns:
        (weighted total, breakdown)
    """
    if bits is None:
        bits = state.binary_bits()
    R, t = state.object_rotations, state.object_translations
    terms: Dict[str, Tensor] = {}
    if weights.pen_object_scene > 0:
        terms["pen_object_scene"] = loss_object_scene(state.object_vertices(object_mesh), object_mesh, scene, seed=seed)
    terms["goal"] = loss_goal(R, t, goals)
    terms["static"] = loss_static(R, t, bits)
    return _combine(terms, weights)


# ----------------------------------------------------------------------
# Human-centric terms
# ----------------------------------------------------------------------

def loss_contact(anchors: Tensor, targets, mask: np.ndarray) -> Tensor:
    """
    Mean squared anchor-to-target distance over active (frame, anchor) pairs

    Args:
        anchors: (L, A, 3) world anchor positions
        targets: (L, A, 3) world targets (array or Tensor)
        mask: (L, A) boolean active pairs
    """
    mask = np.asarray(mask, dtype=bool)
    active = int(mask.sum())
    if active == 0:
        logger.warning("no active contact pairs, contact term is 0")
        return _zero()
    d = _sq_norm(anchors - as_tensor(targets))
    return (d * Tensor._wrap(mask.astype(np.float64))).sum() / float(active)


def _region_pair_penetration(
    vertices_a: Tensor, mesh_a: TriMesh, vertices_b: Tensor, mesh_b: TriMesh, seed: int
) -> Tensor:
    a_in_b = penetration_term(vertices_a, mesh_b, target_vertices=vertices_b, seed=seed)
    b_in_a = penetration_term(vertices_b, mesh_a, target_vertices=vertices_a, seed=seed + 7919)
    return a_in_b + b_in_a


def loss_human_penetration(
    state: DecodedState,
    rig: RigDef,
    object_mesh: TriMesh,
    scene: Scene,
    seed: int = 0,
    which: Tuple[str, ...] = ("ho", "hs", "hh"),
) -> Dict[str, Tensor]:
    """
    Human-object, human-scene and hand-hand penetration

    The body and both hands are separate watertight regions; object and
    scene terms sum over the three regions. Each value is averaged over
    frames by the penetration kernel.

    Returns:
        {"pen_human_object", "pen_human_scene", "pen_human_human"} restricted
        to the requested kinds
    """
    if state.meshes is None:
        raise ValueError("human penetration needs a state decoded with meshes")
    templates = {region: rest_region_mesh(rig, region) for region in REGIONS}
    n = len(state)
    out: Dict[str, Tensor] = {}

    if "ho" in which:
        obj_v = state.object_vertices(object_mesh)
        total = _zero()
        for k, region in enumerate(REGIONS):
            total = total + _region_pair_penetration(
                state.meshes.vertices(region), templates[region], obj_v, object_mesh, seed=seed + 13 * k
            )
        out["pen_human_object"] = total

    if "hs" in which:
        total = _zero()
        for k, region in enumerate(REGIONS):
            for m, static in enumerate(scene.human_meshes):
                verts = state.meshes.vertices(region)
                into_scene = penetration_term(verts, static, bvh=static.bvh(), seed=seed + 31 * k + m)
                scene_points = np.broadcast_to(static.vertices, (n,) + static.vertices.shape)
                into_human = penetration_term(scene_points, templates[region], target_vertices=verts, seed=seed + 57 * k + m)
                total = total + into_scene + into_human
        out["pen_human_scene"] = total

    if "hh" in which:
        out["pen_human_human"] = penetration_loss(
            templates[LEFT_HAND],
            templates[RIGHT_HAND],
            vertices_a=state.meshes.vertices(LEFT_HAND),
            vertices_b=state.meshes.vertices(RIGHT_HAND),
            seed=seed,
        )
    return out


def loss_foot(
    joints: Tensor,
    toe_joints: Tuple[int, int],
    floor_height: float = DefaultsConfig.FLOOR_HEIGHT,
    gate: float = DefaultsConfig.FOOT_SKATE_GATE * DefaultsConfig.TOE_HEIGHT,
) -> Tensor:
    """
    Foot skate: mean squared planar toe velocity over grounded (frame, toe) pairs

    A toe is grounded at frame f when its height above the floor is below
    `gate`; the velocity is the forward difference from f to f + 1.
    """
    n = joints.shape[0]
    if n < 2:
        return _zero()
    toes = list(toe_joints)
    toe = joints[:, toes]
    height = toe.data[:-1, :, 2] - floor_height
    grounded = height < gate
    active = int(grounded.sum())
    if active == 0:
        return _zero()
    velocity = toe[1:, :, :2] - toe[:-1, :, :2]
    return (_sq_norm(velocity) * Tensor._wrap(grounded.astype(np.float64))).sum() / float(active)


def loss_jitter(positions: Tensor) -> Tensor:
    """Mean squared second temporal difference of (L, J, 3) positions"""
    if positions.shape[0] < 3:
        return _zero()
    accel = positions[2:] - positions[1:-1] * 2.0 + positions[:-2]
    return _sq_norm(accel).mean()


def loss_feet_floor_contact(
    joints: Tensor,
    toe_joints: Tuple[int, int],
    h: float = DefaultsConfig.TOE_HEIGHT,
    floor_height: float = DefaultsConfig.FLOOR_HEIGHT,
) -> Tensor:
    """Mean over frames of |min(z_left, z_right) - h| with heights above the floor"""
    left = joints[:, toe_joints[0], 2]
    right = joints[:, toe_joints[1], 2]
    lower = P.minimum(left, right) - (floor_height + h)
    return P.absolute(lower).mean()


def loss_human(
    state: DecodedState,
    rig: RigDef,
    object_mesh: TriMesh,
    scene: Scene,
    weights: LossWeights,
    targets,
    mask: np.ndarray,
    seed: int = 0,
) -> Tuple[Tensor, LossBreakdown]:
    """
    Human-centric objective

    Args:
        state: State decoded with human channels and meshes
        rig: Rig of the state
        object_mesh: Rest-pose object mesh
        scene: Static scene
        weights: Term weights; zero-weight penetration terms are skipped
        targets: (L, A, 3) world contact targets (frozen array in the
            two-phase regime, live Tensor otherwise)
        mask: (L, A) active contact pairs
        seed: Ray seed of the penetration terms

    Returns:
        (weighted total, breakdown)
    """
    terms: Dict[str, Tensor] = {"contact": loss_contact(state.anchors, targets, mask)}
    kinds = tuple(
        kind
        for kind, weight in (
            ("ho", weights.pen_human_object),
            ("hs", weights.pen_human_scene),
            ("hh", weights.pen_human_human),
        )
        if weight > 0
    )
    if kinds:
        terms.update(loss_human_penetration(state, rig, object_mesh, scene, seed=seed, which=kinds))
    joints = state.joints
    terms["foot"] = loss_foot(joints, rig.toe_joints, floor_height=scene.floor_height)
    terms["jitter"] = loss_jitter(joints)
    if weights.feet_floor_contact > 0:
        terms["feet_floor_contact"] = loss_feet_floor_contact(joints, rig.toe_joints, floor_height=scene.floor_height)
    return _combine(terms, weights)


def _combine(terms: Dict[str, Tensor], weights: LossWeights) -> Tuple[Tensor, LossBreakdown]:
    w = weights.to_dict()
    total = _zero()
    for name, value in terms.items():
        total = total + value * w[name]
    breakdown = LossBreakdown(
        terms={k: v.item() for k, v in terms.items()},
        weights={k: w[k] for k in terms},
        total=total.item(),
    )
    return total, breakdown

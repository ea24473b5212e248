"""
Scripted episode synthesis

Timeline (default 115 frames, other durations rescale it):

    idle [0, 15)  reach [15, 35)  approach [35, 40)  contact [40, 95)
    release [95, 100)  retreat [100, 115)

Inside the contact window the object holds [40, 45), moves to the verb's
peak offset [45, 70), to its final offset [70, 90) and holds [90, 95). The
hands clamp the object between their palms: each wrist's grasp pose is an
offset from the object centre, so anchors follow the object rigidly while
in contact.
"""

import logging
from typing import Dict, Optional, Tuple

import numpy as np
from scipy.spatial.transform import Rotation, Slerp

from ..config import DefaultsConfig
from ..exceptions import EncodingError
from ..geometry import TriMesh, nearest_points
from ..losses import GoalSpec
from ..representation import ContactFrame, HumanTrack, ObjectTrack, WorldTracks
from ..rig import LEFT_HAND, RIGHT_HAND, RigDef, anchor_positions_np, forward_kinematics_np, toy_rig
from ..rig.builder import PALM_CENTER, PALM_EXTENTS
from ..rig.skinning import anchor_template
from .ik import ArmSolver
from .models import Episode, PhaseBounds, ScenarioSpec
from .scene import build_scene, object_mesh, rest_position

logger = logging.getLogger(__name__)

PREGRASP_OFFSET = 0.05  # m, sideways standoff before approach and after release
ARC_HEIGHT = 0.08  # m, peak lift of the reach and retreat paths

# Grasp orientation: fingers forward (+y), thumbs up (+z), palm normals unchanged
GRASP_ROTATION = Rotation.from_euler("x", 90.0, degrees=True).as_matrix()


def smoothstep(s):
    s = np.clip(s, 0.0, 1.0)
    return s * s * (3.0 - 2.0 * s)


def _progress(frame: int, span: Tuple[int, int]) -> float:
    """Fraction reached at frame; 1 on the last frame of the span"""
    a, b = span
    return (frame - a + 1) / float(b - a)


def _to_world(local: np.ndarray) -> np.ndarray:
    return GRASP_ROTATION @ np.asarray(local)


def _palm_anchor_centre(rig: RigDef, side: int) -> np.ndarray:
    """Mean wrist-local coordinate of the palm anchors of one hand"""
    joints, local = anchor_template(rig)
    n_left = len(rig.left_anchors)
    sl = slice(0, n_left) if side == 0 else slice(n_left, None)
    wrist = rig.wrist_joints[side]
    on_palm = joints[sl] == wrist
    if not on_palm.any():
        raise EncodingError(f"rig '{rig.name}' has no palm anchors on the {'left' if side == 0 else 'right'} hand")
    return local[sl][on_palm].mean(axis=0)


def grasp_offsets(rig: RigDef, mesh: TriMesh) -> np.ndarray:
    """
    Wrist positions (2, 3) relative to the object centre for a palm clamp

    The palm face rests CONTACT_GAP outside the object's extreme vertex
    within the palm footprint, and the palm anchor centre faces the object
    centre.
    """
    half = np.asarray(PALM_EXTENTS) / 2.0
    centre = np.asarray(PALM_CENTER)
    # Grasp frame maps wrist-local (x, y, z) to (x, -z, y)
    y_lo, y_hi = -(centre[2] + half[2]), -(centre[2] - half[2])
    z_half = half[1]

    offsets = np.zeros((2, 3))
    v = mesh.vertices
    for side in (0, 1):
        anchor = _to_world(_palm_anchor_centre(rig, side))
        wy, wz = -anchor[1], -anchor[2]
        dy, dz = v[:, 1] - wy, v[:, 2] - wz
        inside = (dy >= y_lo) & (dy <= y_hi) & (np.abs(dz) <= z_half)
        candidates = v[inside] if inside.any() else v
        if side == 0:
            support = candidates[:, 0].min()
            wx = support - DefaultsConfig.CONTACT_GAP - half[0]
        else:
            support = candidates[:, 0].max()
            wx = support + DefaultsConfig.CONTACT_GAP + half[0]
        offsets[side] = (wx, wy, wz)
    return offsets


def object_trajectory(spec: ScenarioSpec, phases: PhaseBounds, rest: np.ndarray) -> np.ndarray:
    """(N, 3) object centre per frame with seeded jitter on the verb offsets"""
    rng = np.random.default_rng(spec.seed)
    peak_offset, final_offset = (np.asarray(o, dtype=np.float64) for o in spec.verb.motion)
    peak = rest + peak_offset + rng.uniform(-spec.jitter, spec.jitter, 3)
    final = rest + final_offset
    final[:2] += rng.uniform(-spec.jitter, spec.jitter, 2)

    out = np.tile(rest, (spec.duration, 1))
    carry, place = phases.carry, phases.place
    for f in range(spec.duration):
        if f < carry[0]:
            continue
        if f < carry[1]:
            s = smoothstep((f - carry[0]) / float(carry[1] - carry[0]))
            out[f] = rest + s * (peak - rest)
        elif f < place[1]:
            s = smoothstep((f - place[0]) / float(place[1] - place[0]))
            out[f] = peak + s * (final - peak)
        else:
            out[f] = final
    return out


class _HandPlan:
    """Wrist position and global orientation targets for both hands"""

    def __init__(self, phases: PhaseBounds, rest_wrists: np.ndarray, offsets: np.ndarray, centres: np.ndarray):
        self.phases = phases
        self.rest = rest_wrists
        self.offsets = offsets
        self.centres = centres
        self.outward = np.array([[-PREGRASP_OFFSET, 0.0, 0.0], [PREGRASP_OFFSET, 0.0, 0.0]])
        self.slerp = Slerp([0.0, 1.0], Rotation.from_matrix(np.stack([np.eye(3), GRASP_ROTATION])))

    def grasp(self, frame: int) -> np.ndarray:
        return self.centres[frame] + self.offsets

    def _orientation(self, s: float) -> np.ndarray:
        return self.slerp([float(np.clip(s, 0.0, 1.0))]).as_matrix()[0]

    def target(self, frame: int) -> Tuple[np.ndarray, np.ndarray]:
        """(2, 3) wrist positions and (3, 3) shared wrist orientation"""
        ph = self.phases
        if frame < ph.reach[0]:
            return self.rest, np.eye(3)
        if frame < ph.reach[1]:
            s = smoothstep(_progress(frame, ph.reach))
            start, end = self.rest, self.grasp(ph.approach[0]) + self.outward
            pos = start + s * (end - start)
            pos[:, 2] += ARC_HEIGHT * np.sin(np.pi * s)
            return pos, self._orientation(s)
        if frame < ph.approach[1]:
            s = smoothstep(_progress(frame, ph.approach))
            grasp = self.grasp(frame)
            return grasp + (1.0 - s) * self.outward, GRASP_ROTATION
        if frame < ph.contact[1]:
            return self.grasp(frame), GRASP_ROTATION
        if frame < ph.release[1]:
            s = smoothstep(_progress(frame, ph.release))
            return self.grasp(frame) + s * self.outward, GRASP_ROTATION
        s = smoothstep(_progress(frame, ph.retreat))
        start = self.grasp(frame) + self.outward
        pos = start + s * (self.rest - start)
        pos[:, 2] += ARC_HEIGHT * np.sin(np.pi * s)
        return pos, self._orientation(1.0 - s)


def _label_contacts(
    rig: RigDef,
    local: np.ndarray,
    mesh: TriMesh,
    centre: np.ndarray,
    window: Tuple[int, int],
    duration: int,
) -> Tuple[ContactFrame, Dict[str, int]]:
    """Contact bits and rest-frame points from the anchors at the first contact frame"""
    positions, rotations = forward_kinematics_np(rig, np.asarray(rig.rest_root), local)
    anchors = anchor_positions_np(rig, positions, rotations)
    posed = mesh.with_vertices(mesh.vertices + centre)
    nearest = nearest_points(anchors, posed, bvh=posed.bvh())
    active = nearest.distances <= DefaultsConfig.CONTACT_LABEL_DISTANCE

    n_left = len(rig.left_anchors)
    counts = {LEFT_HAND: int(active[:n_left].sum()), RIGHT_HAND: int(active[n_left:].sum())}
    for region, anchors_on_hand in ((LEFT_HAND, rig.left_anchors), (RIGHT_HAND, rig.right_anchors)):
        needed = min(DefaultsConfig.MIN_CONTACT_ANCHORS, len(anchors_on_hand))
        if counts[region] < needed:
            raise EncodingError(f"{region} has {counts[region]} anchors in contact, need at least {needed}")

    bits = np.zeros((duration, rig.n_anchors))
    points = np.zeros((duration, rig.n_anchors, 3))
    start, end = window
    bits[start:end, active] = 1.0
    points[start:end, active] = nearest.points[active] - centre
    return ContactFrame(bits=bits, points=points), counts


def synth_episode(spec: ScenarioSpec, rig: Optional[RigDef] = None) -> Episode:
    """
    Synthesize one scripted episode

    Args:
        spec: Scenario (verb, shape, seed, timing)
        rig: Rig to pose (toy rig when omitted)

    Returns:
        Episode with world tracks, scene, rest-pose object mesh and contact
        counts per hand

    Raises:
        UnreachableWaypointError: If a wrist target is out of reach
        EncodingError: If a hand lands on too few anchors
    """
    rig = rig or toy_rig()
    n = spec.duration
    phases = PhaseBounds.for_duration(n, spec.prefix_frames)
    scene = build_scene(spec.table_height)
    mesh = object_mesh(spec.shape)
    rest = rest_position(mesh, spec.table_height, spec.object_y)
    centres = object_trajectory(spec, phases, rest)

    solver = ArmSolver(rig)
    rest_wrists = solver.wrist_positions(np.zeros(solver.n_dof))
    plan = _HandPlan(phases, rest_wrists, grasp_offsets(rig, mesh), centres)

    identity = np.broadcast_to(np.eye(3), (rig.n_joints, 3, 3))
    rotations = np.tile(np.eye(3), (n, rig.n_joints, 1, 1))
    q = np.zeros(solver.n_dof)
    for f in range(n):
        if f < phases.reach[0]:
            rotations[f] = identity
            continue
        wrists, orientation = plan.target(f)
        if np.allclose(wrists, rest_wrists, rtol=0.0, atol=1e-12) and np.allclose(orientation, np.eye(3)):
            q = np.zeros(solver.n_dof)
        else:
            q = solver.solve(wrists, q0=q)
        rotations[f] = solver.wrist_local_rotations(q, np.stack([orientation, orientation]))

    contacts, counts = _label_contacts(rig, rotations[phases.contact[0]], mesh, centres[phases.contact[0]], phases.contact, n)

    tracks = WorldTracks(
        human=HumanTrack(root_translation=np.tile(np.asarray(rig.rest_root), (n, 1)), rotations=rotations),
        obj=ObjectTrack(rotations=np.tile(np.eye(3), (n, 1, 1)), translations=centres),
        contacts=contacts,
        fps=spec.fps,
    )
    _check_contact_tracking(rig, tracks, phases)
    logger.debug("synthesized '%s' seed %d: contacts %s", spec.prompt, spec.seed, counts)
    return Episode(spec=spec, tracks=tracks, scene=scene, object_mesh=mesh, phases=phases, contact_counts=counts)


def _check_contact_tracking(rig: RigDef, tracks: WorldTracks, phases: PhaseBounds) -> None:
    """Anchors must stay within the labeling distance of their targets throughout contact"""
    start, end = phases.contact
    positions, rot = forward_kinematics_np(rig, tracks.human.root_translation[start:end], tracks.human.rotations[start:end])
    anchors = anchor_positions_np(rig, positions, rot)
    targets = tracks.contacts.points[start:end] + tracks.obj.translations[start:end, None, :]
    active = tracks.contacts.bits[start:end] > 0.5
    gap = np.linalg.norm(anchors - targets, axis=-1)[active]
    if len(gap) and gap.max() > DefaultsConfig.CONTACT_LABEL_DISTANCE:
        raise EncodingError(f"anchors drift {gap.max() * 1000:.3f} mm from their contact targets")


def idle_prefix(spec: ScenarioSpec, rig: Optional[RigDef] = None) -> WorldTracks:
    """
    Standing rest pose next to the resting object, no contacts

    Used to seed rollouts; the track is spec.prefix_frames long (at least 2
    frames so it can be encoded).
    """
    rig = rig or toy_rig()
    n = max(spec.prefix_frames, 2)
    mesh = object_mesh(spec.shape)
    rest = rest_position(mesh, spec.table_height, spec.object_y)
    return WorldTracks(
        human=HumanTrack(
            root_translation=np.tile(np.asarray(rig.rest_root), (n, 1)),
            rotations=np.tile(np.eye(3), (n, rig.n_joints, 1, 1)),
        ),
        obj=ObjectTrack(rotations=np.tile(np.eye(3), (n, 1, 1)), translations=np.tile(rest, (n, 1))),
        contacts=ContactFrame(bits=np.zeros((n, rig.n_anchors)), points=np.zeros((n, rig.n_anchors, 3))),
        fps=spec.fps,
    )


def episode_goals(episode: Episode, frames: Optional[Tuple[int, ...]] = None) -> GoalSpec:
    """
    Object keyframes taken from the episode's own trajectory

    Defaults to the end of the carry phase and the last frame.
    """
    if frames is None:
        frames = (episode.phases.carry[1] - 1, len(episode.tracks) - 1)
    frames = tuple(int(f) for f in frames)
    return GoalSpec(
        frames=list(frames),
        translations=episode.tracks.obj.translations[list(frames)],
        rotations=episode.tracks.obj.rotations[list(frames)],
    )

"""
Built-in rigs

The toy rig faces +y with z up; the person's right is +x. All rest rotations
are identity. Body parts and hand parts are separated by small gaps so every
region mesh is a disjoint union of closed primitives.

Hand layout (wrist-local, fingers along -z, thumb toward +y):
    palm box 0.025 x 0.08 x 0.09 centred at (0, 0, -0.055)
    palm face at local +x for the left hand and -x for the right hand
    thumb, index (two segments) and middle (two segments) capsules
"""

import logging
from typing import Dict, List, Tuple

import numpy as np

from ..geometry import box
from .models import BODY, LEFT_HAND, RIGHT_HAND, JointDef, PrimitiveDef, RigDef
from .skinning import primitive_mesh

logger = logging.getLogger(__name__)

PALM_EXTENTS = (0.025, 0.08, 0.09)
PALM_CENTER = (0.0, 0.0, -0.055)
PALM_SUBDIVISIONS = 3
LATTICE = 2 ** PALM_SUBDIVISIONS + 1  # vertices per palm face edge

THUMB_DIRECTION = np.array([0.0, 0.6, -0.8])


def _body_joints() -> List[JointDef]:
    return [
        JointDef("pelvis", -1, (0.0, 0.0, 0.0)),
        JointDef("chest", 0, (0.0, 0.0, 0.45)),
        JointDef("l_shoulder", 1, (-0.18, 0.0, 0.05)),
        JointDef("r_shoulder", 1, (0.18, 0.0, 0.05)),
        JointDef("l_elbow", 2, (0.0, 0.0, -0.30)),
        JointDef("r_elbow", 3, (0.0, 0.0, -0.30)),
        JointDef("l_toe", 0, (-0.1, 0.12, -0.93)),
        JointDef("r_toe", 0, (0.1, 0.12, -0.93)),
    ]


def _hand_joints(prefix: str, elbow: int, first: int) -> List[JointDef]:
    wrist, index1, middle1 = first, first + 2, first + 4
    return [
        JointDef(f"{prefix}_wrist", elbow, (0.0, 0.0, -0.27)),
        JointDef(f"{prefix}_thumb1", wrist, (0.0, 0.05, -0.03)),
        JointDef(f"{prefix}_index1", wrist, (0.0, 0.022, -0.105)),
        JointDef(f"{prefix}_index2", index1, (0.0, 0.0, -0.045)),
        JointDef(f"{prefix}_middle1", wrist, (0.0, -0.005, -0.105)),
        JointDef(f"{prefix}_middle2", middle1, (0.0, 0.0, -0.045)),
    ]


def _body_primitives() -> List[PrimitiveDef]:
    return [
        PrimitiveDef("torso", "capsule", 1, BODY, radius=0.12, start=(0.0, 0.0, -0.35), end=(0.0, 0.0, 0.0)),
        PrimitiveDef("l_leg", "capsule", 0, BODY, radius=0.06, start=(-0.1, 0.0, -0.2), end=(-0.1, 0.1, -0.85)),
        PrimitiveDef("r_leg", "capsule", 0, BODY, radius=0.06, start=(0.1, 0.0, -0.2), end=(0.1, 0.1, -0.85)),
        PrimitiveDef("l_upper_arm", "capsule", 2, BODY, radius=0.04, start=(0.0, 0.0, -0.05), end=(0.0, 0.0, -0.22)),
        PrimitiveDef("r_upper_arm", "capsule", 3, BODY, radius=0.04, start=(0.0, 0.0, -0.05), end=(0.0, 0.0, -0.22)),
        PrimitiveDef("l_forearm", "capsule", 4, BODY, radius=0.015, start=(0.0, 0.0, -0.03), end=(0.0, 0.0, -0.24)),
        PrimitiveDef("r_forearm", "capsule", 5, BODY, radius=0.015, start=(0.0, 0.0, -0.03), end=(0.0, 0.0, -0.24)),
    ]


def _hand_primitives(prefix: str, region: str, first: int) -> List[PrimitiveDef]:
    wrist, thumb, index1, index2, middle1, middle2 = range(first, first + 6)
    thumb_start = tuple(0.005 * THUMB_DIRECTION)
    thumb_end = tuple(0.040 * THUMB_DIRECTION)
    return [
        PrimitiveDef(f"{prefix}_palm", "box", wrist, region, extents=PALM_EXTENTS, center=PALM_CENTER, subdivisions=PALM_SUBDIVISIONS),
        PrimitiveDef(f"{prefix}_thumb", "capsule", thumb, region, radius=0.008, start=thumb_start, end=thumb_end),
        PrimitiveDef(f"{prefix}_index_prox", "capsule", index1, region, radius=0.008, start=(0.0, 0.0, -0.005), end=(0.0, 0.0, -0.032)),
        PrimitiveDef(f"{prefix}_index_dist", "capsule", index2, region, radius=0.007, start=(0.0, 0.0, -0.006), end=(0.0, 0.0, -0.030)),
        PrimitiveDef(f"{prefix}_middle_prox", "capsule", middle1, region, radius=0.008, start=(0.0, 0.0, -0.005), end=(0.0, 0.0, -0.032)),
        PrimitiveDef(f"{prefix}_middle_dist", "capsule", middle2, region, radius=0.007, start=(0.0, 0.0, -0.006), end=(0.0, 0.0, -0.030)),
    ]


def palm_lattice(side: str) -> Dict[Tuple[int, int], int]:
    """
    Palm-face lattice of the subdivided palm box

    Returns:
        {(i, j): vertex id} where i counts rows from the wrist toward the
        fingers (-z) and j counts columns along +y
    """
    palm = box(PALM_EXTENTS, center=PALM_CENTER, subdivisions=PALM_SUBDIVISIONS)
    sign = 1.0 if side == "left" else -1.0
    half = np.asarray(PALM_EXTENTS) / 2.0
    center = np.asarray(PALM_CENTER)
    v = palm.vertices
    face_x = center[0] + sign * half[0]
    lattice = {}
    for i in range(LATTICE):
        z = center[2] + half[2] - i * (2.0 * half[2] / (LATTICE - 1))
        for j in range(LATTICE):
            y = center[1] - half[1] + j * (2.0 * half[1] / (LATTICE - 1))
            d = np.linalg.norm(v - np.array([face_x, y, z]), axis=1)
            k = int(np.argmin(d))
            if d[k] > 1e-9:
                raise ValueError(f"palm lattice node ({i}, {j}) has no vertex")
            lattice[(i, j)] = k
    return lattice


def _fingertip_ids(prims: List[PrimitiveDef]) -> List[int]:
    """Far pole of the thumb and of both distal segments in the merged hand mesh"""
    ids, offset = [], 0
    for prim in prims:
        n = len(primitive_mesh(prim).vertices)
        if prim.name.endswith(("_thumb", "_index_dist", "_middle_dist")):
            ids.append(offset + n - 1)
        offset += n
    return ids


PALM_ANCHOR_NODES = [(4, j) for j in range(LATTICE)] + [(i, 4) for i in (2, 3, 5, 6)]
MIDDLE_BASE_NODE = (LATTICE - 1, 4)


def toy_rig() -> RigDef:
    """Default rig: 8 body joints, 6 joints per hand, 16 anchors per hand"""
    joints = _body_joints()
    left_first = len(joints)
    joints += _hand_joints("l", elbow=4, first=left_first)
    right_first = len(joints)
    joints += _hand_joints("r", elbow=5, first=right_first)

    left_prims = _hand_primitives("l", LEFT_HAND, left_first)
    right_prims = _hand_primitives("r", RIGHT_HAND, right_first)

    anchors = {}
    for side, prims in (("left", left_prims), ("right", right_prims)):
        lattice = palm_lattice(side)
        anchors[side] = tuple(lattice[node] for node in PALM_ANCHOR_NODES) + tuple(_fingertip_ids(prims))

    rig = RigDef(
        name="toy",
        joints=tuple(joints),
        primitives=tuple(_body_primitives() + left_prims + right_prims),
        left_anchors=anchors["left"],
        right_anchors=anchors["right"],
        toe_joints=(6, 7),
        wrist_joints=(left_first, right_first),
        rest_root=(0.0, 0.0, 0.95),
    )
    logger.debug("built rig '%s': %d joints, %d anchors", rig.name, rig.n_joints, rig.n_anchors)
    return rig


def omomo_rig() -> RigDef:
    """Toy rig with a single anchor per hand at the middle-finger base of the palm"""
    rig = toy_rig()
    left = (palm_lattice("left")[MIDDLE_BASE_NODE],)
    right = (palm_lattice("right")[MIDDLE_BASE_NODE],)
    return rig.with_anchors(left, right, name="omomo")


RIGS = {"toy": toy_rig, "omomo": omomo_rig}


def build_rig(name: str) -> RigDef:
    if name not in RIGS:
        raise KeyError(f"unknown rig '{name}' (choose from {sorted(RIGS)})")
    return RIGS[name]()

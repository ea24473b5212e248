"""
Data models for the articulated rig
"""

from dataclasses import dataclass
from typing import Any, Optional, Tuple

import numpy as np

from ..numerics import Tensor, as_tensor

Vec3 = Tuple[float, float, float]

BODY = "body"
LEFT_HAND = "left_hand"
RIGHT_HAND = "right_hand"
REGIONS = (BODY, LEFT_HAND, RIGHT_HAND)


@dataclass(frozen=True)
class JointDef:
    """Joint in the kinematic tree; offset is the rest translation in the parent's frame (m)"""
    name: str
    parent: int
    offset: Vec3 = (0.0, 0.0, 0.0)


@dataclass(frozen=True)
class PrimitiveDef:
    """
    Surface primitive rigidly attached to one joint

    Geometry is given in the joint's local frame. Capsules use radius/start/end
    (with segments and cap_rings); boxes use extents/center/subdivisions.
    """
    name: str
    kind: str  # "capsule" or "box"
    joint: int
    region: str  # BODY, LEFT_HAND or RIGHT_HAND
    radius: float = 0.0
    start: Vec3 = (0.0, 0.0, 0.0)
    end: Vec3 = (0.0, 0.0, 0.0)
    extents: Vec3 = (0.0, 0.0, 0.0)
    center: Vec3 = (0.0, 0.0, 0.0)
    subdivisions: int = 0
    segments: int = 8
    cap_rings: int = 4


@dataclass(frozen=True)
class RigDef:
    """
    Immutable rig definition

    Anchor ids index the vertices of the skinned left / right hand meshes; the
    global anchor order is left anchors followed by right anchors.
    """
    name: str
    joints: Tuple[JointDef, ...]
    primitives: Tuple[PrimitiveDef, ...]
    left_anchors: Tuple[int, ...]
    right_anchors: Tuple[int, ...]
    toe_joints: Tuple[int, int]
    wrist_joints: Tuple[int, int]
    rest_root: Vec3 = (0.0, 0.0, 0.0)
    version: int = 1

    @property
    def n_joints(self) -> int:
        return len(self.joints)

    @property
    def n_anchors(self) -> int:
        return len(self.left_anchors) + len(self.right_anchors)

    @property
    def parents(self) -> np.ndarray:
        return np.array([j.parent for j in self.joints], dtype=np.int64)

    @property
    def offsets(self) -> np.ndarray:
        return np.array([j.offset for j in self.joints], dtype=np.float64)

    @property
    def root(self) -> int:
        return int(np.nonzero(self.parents < 0)[0][0])

    def joint_index(self, name: str) -> int:
        for i, joint in enumerate(self.joints):
            if joint.name == name:
                return i
        raise KeyError(f"rig '{self.name}' has no joint '{name}'")

    def region_primitives(self, region: str) -> Tuple[PrimitiveDef, ...]:
        return tuple(p for p in self.primitives if p.region == region)

    def with_anchors(self, left: Tuple[int, ...], right: Tuple[int, ...], name: Optional[str] = None) -> "RigDef":
        return RigDef(
            name=name or self.name,
            joints=self.joints,
            primitives=self.primitives,
            left_anchors=tuple(left),
            right_anchors=tuple(right),
            toe_joints=self.toe_joints,
            wrist_joints=self.wrist_joints,
            rest_root=self.rest_root,
            version=self.version,
        )


@dataclass
class Pose:
    """
    Rig pose, optionally batched over frames

    rotations[..., 0, :] is the global root rotation and the remaining rows are
    local joint rotations, all in cont6d (first two rotation-matrix columns).
    root_translation places the root joint.
    """
    root_translation: Any  # (3,) or (F, 3)
    rotations: Any  # (J, 6) or (F, J, 6)

    def __post_init__(self):
        self.root_translation = as_tensor(self.root_translation)
        self.rotations = as_tensor(self.rotations)

    @property
    def batched(self) -> bool:
        return self.rotations.ndim == 3

    @property
    def n_frames(self) -> int:
        return self.rotations.shape[0] if self.batched else 1

    @classmethod
    def rest(cls, rig: RigDef, frames: Optional[int] = None) -> "Pose":
        identity = np.tile(np.array([1.0, 0.0, 0.0, 0.0, 1.0, 0.0]), (rig.n_joints, 1))
        root = np.array(rig.rest_root, dtype=np.float64)
        if frames is not None:
            identity = np.broadcast_to(identity, (frames,) + identity.shape).copy()
            root = np.broadcast_to(root, (frames, 3)).copy()
        return cls(root_translation=Tensor(root), rotations=Tensor(identity))


@dataclass
class Transforms:
    """Forward-kinematics output: world joint positions (F, J, 3) and rotations (F, J, 3, 3)"""
    positions: Tensor
    rotations: Tensor

    @property
    def n_frames(self) -> int:
        return self.positions.shape[0]

"""
Articulated rig: forward kinematics, rigid skinning and the anchor set
"""

from .builder import build_rig, omomo_rig, palm_lattice, toy_rig
from .kinematics import (
    chain_to_root,
    forward_kinematics,
    forward_kinematics_np,
    forward_kinematics_rotmats,
    joint_order,
    rest_positions,
    validate_tree,
)
from .models import BODY, LEFT_HAND, REGIONS, RIGHT_HAND, JointDef, Pose, PrimitiveDef, RigDef, Transforms
from .rig_io import RigSerializer, rig_hash
from .rotations import cont6d_to_rotmat, cont6d_to_rotmat_np, rotmat_to_cont6d, rotmat_to_cont6d_np
from .skinning import (
    SkinnedMeshes,
    anchor_positions,
    anchor_positions_np,
    region_templates,
    rest_region_mesh,
    skin,
    skin_region_np,
)

__all__ = [
    "BODY",
    "LEFT_HAND",
    "REGIONS",
    "RIGHT_HAND",
    "JointDef",
    "Pose",
    "PrimitiveDef",
    "RigDef",
    "RigSerializer",
    "SkinnedMeshes",
    "Transforms",
    "anchor_positions",
    "anchor_positions_np",
    "build_rig",
    "chain_to_root",
    "cont6d_to_rotmat",
    "cont6d_to_rotmat_np",
    "forward_kinematics",
    "forward_kinematics_np",
    "forward_kinematics_rotmats",
    "joint_order",
    "omomo_rig",
    "palm_lattice",
    "region_templates",
    "rest_positions",
    "rest_region_mesh",
    "rig_hash",
    "rotmat_to_cont6d",
    "rotmat_to_cont6d_np",
    "skin",
    "skin_region_np",
    "toy_rig",
    "validate_tree",
]

"""
Forward kinematics over the joint tree

The tree is held as a networkx DiGraph (parent -> child) and traversed in
topological order. The Tensor path is differentiable and batched over frames;
forward_kinematics_np works on plain rotation matrices for inverse kinematics
and data synthesis.
"""

from functools import lru_cache
from typing import List, Tuple

import networkx as nx
import numpy as np

from ..exceptions import RigError
from ..numerics import Tensor
from ..numerics import primitives as P
from .models import Pose, RigDef, Transforms
from .rotations import cont6d_to_rotmat


def joint_graph(rig: RigDef) -> nx.DiGraph:
    graph = nx.DiGraph()
    for i, joint in enumerate(rig.joints):
        graph.add_node(i, name=joint.name)
        if joint.parent >= 0:
            if joint.parent >= rig.n_joints:
                raise RigError(f"joint '{joint.name}' has parent {joint.parent} outside the rig")
            graph.add_edge(joint.parent, i)
    return graph


def validate_tree(rig: RigDef) -> None:
    """Single root, acyclic, connected"""
    roots = [i for i, j in enumerate(rig.joints) if j.parent < 0]
    if len(roots) != 1:
        raise RigError(f"rig '{rig.name}' needs exactly one root joint, found {len(roots)}")
    graph = joint_graph(rig)
    if not nx.is_directed_acyclic_graph(graph):
        raise RigError(f"rig '{rig.name}' joint tree has a cycle")
    if not nx.is_weakly_connected(graph):
        raise RigError(f"rig '{rig.name}' joint tree is disconnected")


@lru_cache(maxsize=32)
def joint_order(rig: RigDef) -> Tuple[int, ...]:
    """Joint ids with every parent before its children (ties by id)"""
    validate_tree(rig)
    return tuple(nx.lexicographical_topological_sort(joint_graph(rig)))


def chain_to_root(rig: RigDef, joint: int) -> List[int]:
    chain = []
    while joint >= 0:
        chain.append(joint)
        joint = rig.joints[joint].parent
    return chain[::-1]


def forward_kinematics(rig: RigDef, pose: Pose) -> Transforms:
    """
    World joint positions and rotations for a (batched) pose

    Unbatched poses come back with a leading frame axis of length 1.
    """
    rotations = pose.rotations
    root_t = pose.root_translation
    if not pose.batched:
        rotations = rotations.reshape((1,) + rotations.shape)
        root_t = root_t.reshape(1, 3)
    if rotations.shape[1] != rig.n_joints:
        raise RigError(f"pose has {rotations.shape[1]} joint rotations, rig '{rig.name}' has {rig.n_joints}")

    return forward_kinematics_rotmats(rig, root_t, cont6d_to_rotmat(rotations))


def forward_kinematics_rotmats(rig: RigDef, root_t: Tensor, local: Tensor) -> Transforms:
    """Batched FK from (F, 3) root positions and (F, J, 3, 3) rotation matrices (row 0 global)"""
    offsets = rig.offsets
    glob_r: List[Tensor] = [None] * rig.n_joints
    glob_p: List[Tensor] = [None] * rig.n_joints
    for j in joint_order(rig):
        parent = rig.joints[j].parent
        R_local = local[:, j]
        if parent < 0:
            glob_r[j] = R_local
            glob_p[j] = root_t
            continue
        R_parent = glob_r[parent]
        glob_r[j] = P.matmul(R_parent, R_local)
        glob_p[j] = glob_p[parent] + (R_parent * Tensor._wrap(offsets[j][None, None, :])).sum(axis=-1)

    return Transforms(positions=P.stack(glob_p, axis=1), rotations=P.stack(glob_r, axis=1))


def forward_kinematics_np(rig: RigDef, root_translation: np.ndarray, local_rotations: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    FK on rotation matrices, optionally batched over leading axes

    Args:
        rig: Rig definition
        root_translation: (..., 3) root position
        local_rotations: (..., J, 3, 3); joint 0 holds the global root rotation

    Returns:
        (positions (..., J, 3), global rotations (..., J, 3, 3))
    """
    root_translation = np.asarray(root_translation, dtype=np.float64)
    local_rotations = np.asarray(local_rotations, dtype=np.float64)
    lead = local_rotations.shape[:-3]
    offsets = rig.offsets
    positions = np.zeros(lead + (rig.n_joints, 3))
    rotations = np.zeros(lead + (rig.n_joints, 3, 3))
    for j in joint_order(rig):
        parent = rig.joints[j].parent
        if parent < 0:
            rotations[..., j, :, :] = local_rotations[..., j, :, :]
            positions[..., j, :] = root_translation
        else:
            rotations[..., j, :, :] = rotations[..., parent, :, :] @ local_rotations[..., j, :, :]
            positions[..., j, :] = positions[..., parent, :] + rotations[..., parent, :, :] @ offsets[j]
    return positions, rotations


def rest_positions(rig: RigDef) -> np.ndarray:
    identity = np.broadcast_to(np.eye(3), (rig.n_joints, 3, 3))
    return forward_kinematics_np(rig, np.array(rig.rest_root), identity)[0]

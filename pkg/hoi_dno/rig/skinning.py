"""
Rigid per-primitive skinning

Each primitive's template vertices live in its joint's local frame and are
posed as v = R_j v_local + p_j. A region mesh (body, left hand, right hand)
is the disjoint union of its primitives in rig order, so its topology is the
template's for every pose.
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, Tuple

import numpy as np

from ..config import DefaultsConfig
from ..exceptions import RigError
from ..geometry import TriMesh, box, capsule, enforce_budget, merge
from ..numerics import Tensor
from ..numerics import primitives as P
from .kinematics import forward_kinematics_np
from .models import BODY, LEFT_HAND, REGIONS, RIGHT_HAND, PrimitiveDef, RigDef, Transforms


def primitive_mesh(prim: PrimitiveDef) -> TriMesh:
    """Template mesh of one primitive in its joint's local frame"""
    if prim.kind == "capsule":
        return capsule(prim.radius, prim.start, prim.end, segments=prim.segments, cap_rings=prim.cap_rings, name=prim.name)
    if prim.kind == "box":
        return box(prim.extents, center=prim.center, subdivisions=prim.subdivisions, name=prim.name)
    raise RigError(f"primitive '{prim.name}' has unknown kind '{prim.kind}'")


@dataclass(frozen=True, eq=False)
class RegionTemplate:
    """
    Skinning template of one region

    blocks[i] = (joint id, first vertex, vertex count) over local_vertices.
    """
    region: str
    local_vertices: np.ndarray
    faces: np.ndarray
    vertex_joints: np.ndarray
    blocks: Tuple[Tuple[int, int, int], ...]

    @property
    def n_vertices(self) -> int:
        return len(self.local_vertices)


@lru_cache(maxsize=16)
def region_templates(rig: RigDef) -> Dict[str, RegionTemplate]:
    templates = {}
    for region in REGIONS:
        prims = rig.region_primitives(region)
        if not prims:
            raise RigError(f"rig '{rig.name}' has no primitives in region '{region}'")
        meshes = [primitive_mesh(p) for p in prims]
        merged = merge(meshes, name=f"{rig.name}:{region}")
        blocks, start = [], 0
        for prim, mesh in zip(prims, meshes):
            blocks.append((prim.joint, start, len(mesh.vertices)))
            start += len(mesh.vertices)
        joints = np.concatenate([np.full(n, j) for j, _, n in blocks])
        templates[region] = RegionTemplate(
            region=region,
            local_vertices=merged.vertices,
            faces=merged.faces,
            vertex_joints=joints,
            blocks=tuple(blocks),
        )
    for region, anchors in ((LEFT_HAND, rig.left_anchors), (RIGHT_HAND, rig.right_anchors)):
        n = templates[region].n_vertices
        if n > DefaultsConfig.HAND_VERTEX_BUDGET:
            raise RigError(f"rig '{rig.name}' {region} has {n} vertices, budget is {DefaultsConfig.HAND_VERTEX_BUDGET}")
        if any(a < 0 or a >= n for a in anchors):
            raise RigError(f"rig '{rig.name}' has {region} anchor ids outside [0, {n})")
    return templates


@dataclass
class SkinnedMeshes:
    """Posed region vertices (F, V, 3) sharing the template faces"""
    body: Tensor
    left_hand: Tensor
    right_hand: Tensor
    faces: Dict[str, np.ndarray]

    def vertices(self, region: str) -> Tensor:
        return getattr(self, region)

    def mesh(self, region: str, frame: int = 0) -> TriMesh:
        """Posed mesh of one region at one frame (validated topology, no copy checks)"""
        return TriMesh.unchecked(self.vertices(region).data[frame], self.faces[region], name=region, watertight=True)


def _pose_local(local: np.ndarray, rotation: Tensor, position: Tensor) -> Tensor:
    """(K, 3) local points posed by (F, 3, 3) / (F, 3) -> (F, K, 3)"""
    rotated = P.matmul(Tensor._wrap(local), rotation.swap_last())
    return rotated + position.reshape(position.shape[0], 1, 3)


def skin_region(rig: RigDef, transforms: Transforms, region: str) -> Tensor:
    template = region_templates(rig)[region]
    parts = []
    for joint, start, count in template.blocks:
        local = template.local_vertices[start:start + count]
        parts.append(_pose_local(local, transforms.rotations[:, joint], transforms.positions[:, joint]))
    return P.concat(parts, axis=1) if len(parts) > 1 else parts[0]


def skin(rig: RigDef, transforms: Transforms) -> SkinnedMeshes:
    """Posed body and hand meshes for every frame of transforms"""
    templates = region_templates(rig)
    return SkinnedMeshes(
        body=skin_region(rig, transforms, BODY),
        left_hand=skin_region(rig, transforms, LEFT_HAND),
        right_hand=skin_region(rig, transforms, RIGHT_HAND),
        faces={region: t.faces for region, t in templates.items()},
    )


@lru_cache(maxsize=16)
def anchor_template(rig: RigDef) -> Tuple[np.ndarray, np.ndarray]:
    """(A,) owning joints and (A, 3) local coordinates of the anchors, left then right"""
    templates = region_templates(rig)
    joints, local = [], []
    for region, ids in ((LEFT_HAND, rig.left_anchors), (RIGHT_HAND, rig.right_anchors)):
        ids = np.asarray(ids, dtype=np.int64)
        joints.append(templates[region].vertex_joints[ids])
        local.append(templates[region].local_vertices[ids])
    return np.concatenate(joints), np.concatenate(local)


def anchor_positions(rig: RigDef, transforms: Transforms) -> Tensor:
    """World anchor positions (F, A, 3); equals gathering the skinned hand vertices"""
    joints, local = anchor_template(rig)
    R = transforms.rotations[:, joints]
    p = transforms.positions[:, joints]
    return (R * Tensor._wrap(local[None, :, None, :])).sum(axis=-1) + p


def anchor_positions_np(rig: RigDef, positions: np.ndarray, rotations: np.ndarray) -> np.ndarray:
    """Numpy anchor positions from (..., J, 3) positions and (..., J, 3, 3) rotations"""
    joints, local = anchor_template(rig)
    return np.einsum("...aij,aj->...ai", rotations[..., joints, :, :], local) + positions[..., joints, :]


def skin_region_np(rig: RigDef, region: str, positions: np.ndarray, rotations: np.ndarray) -> np.ndarray:
    """Numpy region vertices from one frame's (J, 3) positions and (J, 3, 3) rotations"""
    template = region_templates(rig)[region]
    j = template.vertex_joints
    return np.einsum("vij,vj->vi", rotations[j], template.local_vertices) + positions[j]


def rest_region_mesh(rig: RigDef, region: str) -> TriMesh:
    """Validated, budget-checked mesh of a region at the rest pose"""
    identity = np.broadcast_to(np.eye(3), (rig.n_joints, 3, 3))
    pos, rot = forward_kinematics_np(rig, np.array(rig.rest_root), identity)
    mesh = TriMesh(skin_region_np(rig, region, pos, rot), region_templates(rig)[region].faces, name=region)
    if region != BODY:
        enforce_budget(mesh, max_vertices=DefaultsConfig.HAND_VERTEX_BUDGET)
    return mesh

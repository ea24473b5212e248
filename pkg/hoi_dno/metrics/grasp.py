"""
Grasp failure metrics: penetration depth and floating distance
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional

import numpy as np

from ..config import DefaultsConfig
from ..geometry import SdfGrid, TriMesh, nearest_points, points_in_mesh, query_sdf
from ..representation import RootTransform, WorldTracks, decode_features
from ..rig import LEFT_HAND, REGIONS, RIGHT_HAND, RigDef, anchor_positions_np, forward_kinematics_np, skin_region_np
from .models import GraspMetrics

logger = logging.getLogger(__name__)

MM = 1000.0


@dataclass
class PosedSequence:
    """Numpy world-space view of an encoded sequence for evaluation"""
    tracks: WorldTracks
    positions: np.ndarray  # (F, J, 3)
    rotations: np.ndarray  # (F, J, 3, 3)

    def __len__(self) -> int:
        return len(self.tracks)

    def region_vertices(self, rig: RigDef, region: str, frame: int) -> np.ndarray:
        return skin_region_np(rig, region, self.positions[frame], self.rotations[frame])

    def human_vertices(self, rig: RigDef, frame: int, regions=REGIONS) -> np.ndarray:
        return np.concatenate([self.region_vertices(rig, region, frame) for region in regions])

    def to_object_frame(self, points: np.ndarray, frame: int) -> np.ndarray:
        """World points expressed in the object's rest frame at one frame"""
        R = self.tracks.obj.rotations[frame]
        t = self.tracks.obj.translations[frame]
        return (points - t) @ R

    def object_min_height(self, mesh: TriMesh) -> np.ndarray:
        """(F,) lowest posed object vertex height"""
        posed = np.einsum("fij,vj->fvi", self.tracks.obj.rotations, mesh.vertices)
        return posed[..., 2].min(axis=1) + self.tracks.obj.translations[:, 2]


def pose_sequence(features: np.ndarray, root: RootTransform, rig: RigDef) -> PosedSequence:
    tracks = decode_features(features, root, rig)
    positions, rotations = forward_kinematics_np(rig, tracks.human.root_translation, tracks.human.rotations)
    return PosedSequence(tracks=tracks, positions=positions, rotations=rotations)


def above_table(posed: PosedSequence, mesh: TriMesh, table_height: float) -> np.ndarray:
    """(F,) True where the object is lifted clear of the table"""
    return posed.object_min_height(mesh) > table_height + DefaultsConfig.TABLE_GATE


def frame_contact_geometry(
    posed: PosedSequence, rig: RigDef, mesh: TriMesh, frame: int, seed: int = 0
) -> Dict[str, float]:
    """
    Deepest human-in-object penetration and closest human-object distance
    at one frame, in metres
    """
    local = posed.to_object_frame(posed.human_vertices(rig, frame), frame)
    nearest = nearest_points(local, mesh, bvh=mesh.bvh())
    inside = points_in_mesh(local, mesh, seed=seed + frame, bvh=mesh.bvh())
    if inside.any():
        return {"depth": float(nearest.distances[inside].max()), "gap": 0.0}
    return {"depth": 0.0, "gap": float(nearest.distances.min())}


def penetration_floating(
    features: np.ndarray,
    root: RootTransform,
    rig: RigDef,
    mesh: TriMesh,
    table_height: float = DefaultsConfig.TABLE_HEIGHT,
    seed: int = 0,
) -> GraspMetrics:
    """
    Penetration and floating of one sequence

    Only frames where the object is above the table count. A frame with any
    human vertex inside the object contributes its maximal depth to
    penetration; every other counted frame contributes its shortest
    human-object distance to floating. Both are means in millimetres, 0
    when no frame contributes.

    Args:
        features: (F, D) denormalized features
        root: Root transform of the first frame
        rig: Rig of the features
        mesh: Object mesh in its rest frame
        table_height: Support surface height
        seed: Seed for inside-test ray directions
    """
    posed = pose_sequence(features, root, rig)
    lifted = above_table(posed, mesh, table_height)
    depths: List[float] = []
    gaps: List[float] = []
    for frame in np.flatnonzero(lifted):
        geom = frame_contact_geometry(posed, rig, mesh, int(frame), seed)
        if geom["depth"] > 0.0:
            depths.append(geom["depth"])
        else:
            gaps.append(geom["gap"])
    if not lifted.any():
        logger.warning("object never leaves the table; grasp metrics are empty")
    return GraspMetrics(
        penetration_mm=float(np.mean(depths)) * MM if depths else 0.0,
        floating_mm=float(np.mean(gaps)) * MM if gaps else 0.0,
        penetration_frames=len(depths),
        floating_frames=len(gaps),
    )


def hand_signed_distances(
    posed: PosedSequence, rig: RigDef, sdf: SdfGrid, frame: int, hands=(LEFT_HAND, RIGHT_HAND)
) -> np.ndarray:
    """Signed distance of every hand vertex to the object surface (negative inside), read from the object SDF"""
    local = posed.to_object_frame(posed.human_vertices(rig, frame, hands), frame)
    distances, _ = query_sdf(sdf, local)
    return distances


def anchor_distances(posed: PosedSequence, rig: RigDef, mesh: TriMesh, frame: Optional[int] = None) -> np.ndarray:
    """Unsigned anchor-to-object-surface distances (F, A), or (A,) for one frame"""
    frames = range(len(posed)) if frame is None else [frame]
    out = []
    for f in frames:
        anchors = anchor_positions_np(rig, posed.positions[f], posed.rotations[f])
        out.append(nearest_points(posed.to_object_frame(anchors, f), mesh, bvh=mesh.bvh()).distances)
    return np.stack(out) if frame is None else out[0]

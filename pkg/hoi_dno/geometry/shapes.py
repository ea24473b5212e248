"""
Primitive mesh builders and surface sampling

Boxes, cylinders and icospheres come from trimesh.creation; capsules are
built here so their ring layout (and therefore vertex ids) is fixed.
"""

from typing import Sequence

import numpy as np
import trimesh
from scipy.spatial.transform import Rotation

from .mesh import TriMesh


def from_trimesh(tm: "trimesh.Trimesh", name: str = "") -> TriMesh:
    return TriMesh(np.asarray(tm.vertices), np.asarray(tm.faces), name=name)


def box(extents: Sequence[float], center: Sequence[float] = (0.0, 0.0, 0.0), subdivisions: int = 0, name: str = "box") -> TriMesh:
    """Axis-aligned box; each subdivision splits every triangle in four"""
    tm = trimesh.creation.box(extents=np.asarray(extents, dtype=np.float64))
    for _ in range(subdivisions):
        tm = tm.subdivide()
    return TriMesh(np.asarray(tm.vertices) + np.asarray(center, dtype=np.float64), np.asarray(tm.faces), name=name)


def cylinder(radius: float, height: float, sections: int = 32, name: str = "cylinder") -> TriMesh:
    """Cylinder along z centered at the origin"""
    return from_trimesh(trimesh.creation.cylinder(radius=radius, height=height, sections=sections), name=name)


def icosphere(radius: float, subdivisions: int = 3, name: str = "sphere") -> TriMesh:
    return from_trimesh(trimesh.creation.icosphere(subdivisions=subdivisions, radius=radius), name=name)


def _align_z(direction: np.ndarray) -> np.ndarray:
    """Rotation matrix taking +z onto the unit direction"""
    z = np.array([0.0, 0.0, 1.0])
    axis = np.cross(z, direction)
    s = np.linalg.norm(axis)
    c = float(np.dot(z, direction))
    if s < 1e-12:
        return np.eye(3) if c > 0 else Rotation.from_rotvec([np.pi, 0.0, 0.0]).as_matrix()
    return Rotation.from_rotvec(axis / s * np.arctan2(s, c)).as_matrix()


def capsule(
    radius: float,
    start: Sequence[float],
    end: Sequence[float],
    segments: int = 8,
    cap_rings: int = 4,
    name: str = "capsule",
) -> TriMesh:
    """
    Closed capsule around the segment start-end

    Layout: bottom pole, cap_rings rings on the start hemisphere, cap_rings
    rings on the end hemisphere, top pole; 2 + 2 * cap_rings * segments
    vertices in total.
    """
    start = np.asarray(start, dtype=np.float64)
    end = np.asarray(end, dtype=np.float64)
    axis = end - start
    length = float(np.linalg.norm(axis))
    if length <= 0:
        raise ValueError("capsule needs start != end")

    angles = 2.0 * np.pi * np.arange(segments) / segments
    ring_xy = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    polar = 0.5 * np.pi * np.arange(1, cap_rings + 1) / cap_rings

    rings = []
    for phi in polar:
        rings.append((radius * np.sin(phi), -radius * np.cos(phi)))
    for phi in polar[::-1]:
        rings.append((radius * np.sin(phi), length + radius * np.cos(phi)))

    verts = [np.array([[0.0, 0.0, -radius]])]
    for rho, z in rings:
        verts.append(np.column_stack([rho * ring_xy, np.full(segments, z)]))
    verts.append(np.array([[0.0, 0.0, length + radius]]))
    local = np.concatenate(verts)

    faces = []
    top = len(local) - 1
    nxt = (np.arange(segments) + 1) % segments
    first = 1 + np.arange(segments)
    faces.append(np.column_stack([np.zeros(segments, dtype=int), first[nxt], first]))
    for r in range(len(rings) - 1):
        lo = 1 + r * segments + np.arange(segments)
        up = lo + segments
        faces.append(np.column_stack([lo, lo[nxt], up[nxt]]))
        faces.append(np.column_stack([lo, up[nxt], up]))
    last = 1 + (len(rings) - 1) * segments + np.arange(segments)
    faces.append(np.column_stack([last, last[nxt], np.full(segments, top)]))

    world = local @ _align_z(axis / length).T + start
    return TriMesh(world, np.concatenate(faces), name=name)


def sample_surface(mesh: TriMesh, count: int, seed: int = 0) -> np.ndarray:
    """Points uniformly distributed by area, deterministic per seed"""
    rng = np.random.default_rng(seed)
    areas = mesh.face_areas
    face_ids = rng.choice(len(areas), size=count, p=areas / areas.sum())
    r1 = np.sqrt(rng.random(count))
    r2 = rng.random(count)
    tri = mesh.triangles[face_ids]
    w0 = 1.0 - r1
    w1 = r1 * (1.0 - r2)
    w2 = r1 * r2
    return w0[:, None] * tri[:, 0] + w1[:, None] * tri[:, 1] + w2[:, None] * tri[:, 2]

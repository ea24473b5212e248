"""
Indexed triangle meshes
"""

from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from ..config import DefaultsConfig
from ..exceptions import MeshBudgetError, MeshError, NotWatertightError


@dataclass(frozen=True, eq=False)
class TriMesh:
    """
    Triangle surface in meters

    Normals are always derived from the winding order. `watertight` is
    computed at construction: every undirected edge is shared by exactly two
    faces and every directed edge appears once (consistent orientation).
    """
    vertices: np.ndarray
    faces: np.ndarray
    name: str = ""
    watertight: bool = field(init=False)

    def __post_init__(self):
        vertices = np.array(self.vertices, dtype=np.float64).reshape(-1, 3)
        faces = np.array(self.faces, dtype=np.int64).reshape(-1, 3)
        if faces.size and (faces.min() < 0 or faces.max() >= len(vertices)):
            raise MeshError(f"mesh '{self.name}': face index out of range [0, {len(vertices)})")
        vertices.setflags(write=False)
        faces.setflags(write=False)
        object.__setattr__(self, "vertices", vertices)
        object.__setattr__(self, "faces", faces)
        areas = self.face_areas
        if faces.size and areas.min() <= DefaultsConfig.MIN_FACE_AREA:
            bad = int(np.argmin(areas))
            raise MeshError(f"mesh '{self.name}': face {bad} is degenerate (area {areas[bad]:.3e} m²)")
        object.__setattr__(self, "watertight", is_watertight(faces))

    @classmethod
    def unchecked(cls, vertices: np.ndarray, faces: np.ndarray, name: str = "", watertight: bool = True) -> "TriMesh":
        """Wrap arrays whose topology is already validated (e.g. a posed copy of a template)"""
        mesh = object.__new__(cls)
        object.__setattr__(mesh, "vertices", np.asarray(vertices, dtype=np.float64))
        object.__setattr__(mesh, "faces", faces)
        object.__setattr__(mesh, "name", name)
        object.__setattr__(mesh, "watertight", watertight)
        return mesh

    @property
    def triangles(self) -> np.ndarray:
        """(M, 3, 3) corner coordinates"""
        return self.vertices[self.faces]

    @property
    def face_cross(self) -> np.ndarray:
        tri = self.triangles
        return np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])

    @property
    def face_areas(self) -> np.ndarray:
        return 0.5 * np.linalg.norm(self.face_cross, axis=1)

    @property
    def face_normals(self) -> np.ndarray:
        c = self.face_cross
        return c / np.linalg.norm(c, axis=1, keepdims=True)

    @property
    def bounds(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    @property
    def volume(self) -> float:
        tri = self.triangles
        return float(np.einsum("ij,ij->i", tri[:, 0], np.cross(tri[:, 1], tri[:, 2])).sum() / 6.0)

    def bvh(self) -> "Bvh":
        """Face BVH, built on first use and cached on the mesh"""
        cached = self.__dict__.get("_bvh")
        if cached is None:
            from .bvh import Bvh
            cached = Bvh.build(self)
            object.__setattr__(self, "_bvh", cached)
        return cached

    def with_vertices(self, vertices: np.ndarray) -> "TriMesh":
        return TriMesh.unchecked(vertices, self.faces, name=self.name, watertight=self.watertight)

    def transformed(self, rotation: Optional[np.ndarray] = None, translation: Optional[np.ndarray] = None) -> "TriMesh":
        v = self.vertices
        if rotation is not None:
            v = v @ np.asarray(rotation).T
        if translation is not None:
            v = v + np.asarray(translation)
        return self.with_vertices(v)

    def __repr__(self) -> str:
        return f"TriMesh(name={self.name!r}, vertices={len(self.vertices)}, faces={len(self.faces)}, watertight={self.watertight})"


def is_watertight(faces: np.ndarray) -> bool:
    if len(faces) == 0:
        return False
    directed = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
    if len(np.unique(directed, axis=0)) != len(directed):
        return False
    undirected = np.sort(directed, axis=1)
    _, counts = np.unique(undirected, axis=0, return_counts=True)
    return bool(np.all(counts == 2))


def require_watertight(mesh: TriMesh) -> None:
    if not mesh.watertight:
        raise NotWatertightError(f"mesh '{mesh.name}' is not watertight")


def enforce_budget(mesh: TriMesh, max_faces: Optional[int] = None, max_vertices: Optional[int] = None) -> TriMesh:
    """Reject meshes above the ingestion budgets"""
    if max_faces is not None and len(mesh.faces) > max_faces:
        raise MeshBudgetError(f"mesh '{mesh.name}' has {len(mesh.faces)} faces, budget is {max_faces}")
    if max_vertices is not None and len(mesh.vertices) > max_vertices:
        raise MeshBudgetError(f"mesh '{mesh.name}' has {len(mesh.vertices)} vertices, budget is {max_vertices}")
    return mesh


def merge(meshes, name: str = "") -> TriMesh:
    """Disjoint union of meshes (vertex ids offset in order)"""
    vertices, faces, offset = [], [], 0
    for m in meshes:
        vertices.append(m.vertices)
        faces.append(m.faces + offset)
        offset += len(m.vertices)
    return TriMesh(np.concatenate(vertices), np.concatenate(faces), name=name)

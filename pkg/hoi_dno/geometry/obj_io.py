"""
Wavefront OBJ reading and writing

Only `v` and `f` records are used. Face tokens may carry texture/normal
indices (`3/1/2`); only the vertex index is kept. Polygons are fan
triangulated. Normals in the file are ignored; they are recomputed from the
winding.
"""

import logging
from pathlib import Path
from typing import Optional, Union

import numpy as np

from ..config import DefaultsConfig
from ..exceptions import MeshError
from .mesh import TriMesh, enforce_budget

logger = logging.getLogger(__name__)


def _vertex_index(token: str, n_vertices: int, path: str, line_no: int) -> int:
    raw = token.split("/")[0]
    try:
        idx = int(raw)
    except ValueError:
        raise MeshError(f"{path}:{line_no}: bad face index '{token}'")
    # Negative indices count back from the latest vertex
    idx = idx - 1 if idx > 0 else n_vertices + idx
    if not 0 <= idx < n_vertices:
        raise MeshError(f"{path}:{line_no}: face index {raw} out of range")
    return idx


def load_obj(
    path: Union[str, Path],
    name: Optional[str] = None,
    max_faces: Optional[int] = DefaultsConfig.OBJECT_FACE_BUDGET,
) -> TriMesh:
    """
    Load an OBJ file as a TriMesh

    Args:
        path: File path
        name: Mesh name (defaults to the file stem)
        max_faces: Face budget after triangulation; None disables the check

    Returns:
        Validated TriMesh

    Raises:
        FileNotFoundError: Missing file
        MeshError: Malformed records or invalid mesh
        MeshBudgetError: More faces than max_faces
    """
    path = Path(path)
    vertices, faces = [], []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "v":
                if len(parts) < 4:
                    raise MeshError(f"{path}:{line_no}: vertex needs 3 coordinates")
                vertices.append([float(x) for x in parts[1:4]])
            elif parts[0] == "f":
                ids = [_vertex_index(t, len(vertices), str(path), line_no) for t in parts[1:]]
                if len(ids) < 3:
                    raise MeshError(f"{path}:{line_no}: face needs at least 3 vertices")
                for k in range(1, len(ids) - 1):
                    faces.append([ids[0], ids[k], ids[k + 1]])

    if not faces:
        raise MeshError(f"{path}: no faces")
    mesh = TriMesh(np.array(vertices), np.array(faces), name=name or path.stem)
    logger.debug("loaded %s", mesh)
    return enforce_budget(mesh, max_faces=max_faces)


def save_obj(path: Union[str, Path], mesh: TriMesh) -> None:
    """Write vertices and 1-based triangle faces"""
    lines = [f"# {mesh.name}"] if mesh.name else []
    lines += [f"v {x:.9g} {y:.9g} {z:.9g}" for x, y, z in mesh.vertices]
    lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in mesh.faces]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

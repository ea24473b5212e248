"""
Generalized winding number

Exhaustive solid-angle sum over all faces; slow but exact for closed meshes,
so it doubles as the reference for the single-ray inside test.
"""

import numpy as np

from .mesh import TriMesh


def winding_numbers(points: np.ndarray, mesh: TriMesh, chunk: int = 256) -> np.ndarray:
    """Winding number of the mesh around each point (about 1 inside, 0 outside)"""
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    tri = mesh.triangles
    out = np.empty(len(points))
    for begin in range(0, len(points), chunk):
        p = points[begin:begin + chunk, None, None, :]
        r = tri[None, :, :, :] - p
        a, b, c = r[..., 0, :], r[..., 1, :], r[..., 2, :]
        la = np.linalg.norm(a, axis=-1)
        lb = np.linalg.norm(b, axis=-1)
        lc = np.linalg.norm(c, axis=-1)
        det = np.einsum("...i,...i->...", a, np.cross(b, c))
        denom = (
            la * lb * lc
            + np.einsum("...i,...i->...", a, b) * lc
            + np.einsum("...i,...i->...", b, c) * la
            + np.einsum("...i,...i->...", c, a) * lb
        )
        out[begin:begin + chunk] = (2.0 * np.arctan2(det, denom)).sum(axis=1) / (4.0 * np.pi)
    return out


def inside_by_winding(points: np.ndarray, mesh: TriMesh) -> np.ndarray:
    return np.abs(winding_numbers(points, mesh)) > 0.5

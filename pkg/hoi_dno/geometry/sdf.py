"""
Signed distance grids

Baked from a watertight mesh with exact nearest-point distances and the
single-ray inside test for the sign (negative inside). Queries interpolate
trilinearly; points outside the grid are clamped onto it and the distance
to the grid box is added, and the result reports which points were clamped.

File layout (little-endian):
    b"SDF1" | extents u64 x 3 | origin f64 x 3 | cell f64 | values f32 (x-major)
"""

import hashlib
import logging
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional, Tuple, Union

import numpy as np

from ..config import DefaultsConfig
from ..exceptions import ArtifactError, MeshError
from .mesh import TriMesh, require_watertight
from .queries import nearest_points, points_in_mesh

logger = logging.getLogger(__name__)

MAGIC = b"SDF1"

# (mesh digest, resolution, seed) -> grid baked in this process
_BAKED: Dict[Tuple[str, int, int], "SdfGrid"] = {}


@dataclass(frozen=True, eq=False)
class SdfGrid:
    """Regular grid of signed distances; node (i, j, k) sits at origin + cell * (i, j, k)"""
    origin: np.ndarray
    cell: float
    values: np.ndarray

    @property
    def shape(self) -> Tuple[int, int, int]:
        return self.values.shape

    @property
    def upper(self) -> np.ndarray:
        return self.origin + self.cell * (np.array(self.shape) - 1)

    @property
    def cell_diagonal(self) -> float:
        return float(self.cell * np.sqrt(3.0))

    def node_positions(self) -> np.ndarray:
        axes = [self.origin[i] + self.cell * np.arange(n) for i, n in enumerate(self.shape)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)


def bake_sdf(mesh: TriMesh, resolution: int = 32, seed: int = 0) -> SdfGrid:
    """
    Sample signed distances on a cubic-cell grid around the mesh

    Args:
        mesh: Watertight mesh
        resolution: Nodes along the longest axis (>= 16)
        seed: Ray seed for the inside test

    Returns:
        SdfGrid whose bounds enclose the mesh with a 10% margin per side
    """
    require_watertight(mesh)
    if resolution < DefaultsConfig.SDF_MIN_RESOLUTION:
        raise MeshError(f"SDF resolution {resolution} below minimum {DefaultsConfig.SDF_MIN_RESOLUTION}")
    lo, hi = mesh.bounds
    extent = hi - lo
    lo = lo - DefaultsConfig.SDF_MARGIN * extent.max()
    hi = hi + DefaultsConfig.SDF_MARGIN * extent.max()
    cell = float((hi - lo).max() / (resolution - 1))
    shape = tuple(int(np.ceil((hi[i] - lo[i]) / cell)) + 1 for i in range(3))
    grid = SdfGrid(origin=lo, cell=cell, values=np.zeros(shape))

    nodes = grid.node_positions()
    values = np.empty(len(nodes))
    bvh = mesh.bvh()
    chunk = DefaultsConfig.SDF_CHUNK
    for begin in range(0, len(nodes), chunk):
        p = nodes[begin:begin + chunk]
        dist = nearest_points(p, mesh, bvh=bvh).distances
        inside = points_in_mesh(p, mesh, seed=seed + begin, bvh=bvh)
        values[begin:begin + chunk] = np.where(inside, -dist, dist)
    return SdfGrid(origin=lo, cell=cell, values=values.reshape(shape))


def query_sdf(grid: SdfGrid, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Trilinear signed distance at points

    Returns:
        (distances, clamped) where clamped flags points outside the grid; for
        those the value at the clamped position plus the distance to the grid
        box is returned
    """
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    clamped_pts = np.clip(points, grid.origin, grid.upper)
    outside = np.linalg.norm(points - clamped_pts, axis=1)
    clamped = outside > 0

    rel = (clamped_pts - grid.origin) / grid.cell
    shape = np.array(grid.shape)
    base = np.minimum(np.floor(rel).astype(np.int64), shape - 2)
    frac = rel - base
    v = grid.values
    out = np.zeros(len(points))
    for dx in (0, 1):
        wx = frac[:, 0] if dx else 1.0 - frac[:, 0]
        for dy in (0, 1):
            wy = frac[:, 1] if dy else 1.0 - frac[:, 1]
            for dz in (0, 1):
                wz = frac[:, 2] if dz else 1.0 - frac[:, 2]
                out += wx * wy * wz * v[base[:, 0] + dx, base[:, 1] + dy, base[:, 2] + dz]
    return out + outside, clamped


def save_sdf(path: str, grid: SdfGrid) -> None:
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<3Q", *grid.shape))
        fh.write(struct.pack("<3d", *grid.origin))
        fh.write(struct.pack("<d", grid.cell))
        fh.write(np.ascontiguousarray(grid.values, dtype="<f4").tobytes(order="C"))


def load_sdf(path: str) -> SdfGrid:
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] != MAGIC:
        raise ArtifactError(f"{path}: not an SDF1 file")
    shape = struct.unpack_from("<3Q", raw, 4)
    origin = np.array(struct.unpack_from("<3d", raw, 28))
    (cell,) = struct.unpack_from("<d", raw, 52)
    count = int(np.prod(shape))
    if len(raw) != 60 + 4 * count:
        raise ArtifactError(f"{path}: payload size mismatch")
    values = np.frombuffer(raw, dtype="<f4", count=count, offset=60).astype(np.float64).reshape(shape)
    return SdfGrid(origin=origin, cell=float(cell), values=values)


def mesh_digest(mesh: TriMesh) -> str:
    """Content hash of vertex positions and faces"""
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(mesh.vertices, dtype="<f8").tobytes())
    h.update(np.ascontiguousarray(mesh.faces, dtype="<i8").tobytes())
    return h.hexdigest()


def object_sdf(
    mesh: TriMesh,
    cache_dir: Optional[Union[str, Path]] = None,
    resolution: int = DefaultsConfig.SDF_RESOLUTION,
    seed: int = 0,
) -> SdfGrid:
    """
    SDF of an object mesh, baked at most once per mesh

    Grids are memoized per process by mesh content. With cache_dir the grid
    is also read from, or written to, an SDF file named after the mesh
    digest, so later evaluations of the same object skip the bake.

    Raises:
        ArtifactError: Unreadable cache file
        MeshError: Resolution below the floor
    """
    digest = mesh_digest(mesh)
    key = (digest, resolution, seed)
    grid = _BAKED.get(key)
    path = None
    if cache_dir is not None:
        path = Path(cache_dir) / DefaultsConfig.SDF_CACHE_NAME.format(digest=digest[:16], resolution=resolution)
    if grid is None and path is not None and path.exists():
        grid = load_sdf(str(path))
        logger.debug("loaded SDF of '%s' from %s", mesh.name, path)
    if grid is None:
        grid = bake_sdf(mesh, resolution=resolution, seed=seed)
        logger.info("baked %s SDF of '%s'", "x".join(str(n) for n in grid.shape), mesh.name)
    _BAKED[key] = grid
    if path is not None and not path.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
        save_sdf(str(path), grid)
    return grid

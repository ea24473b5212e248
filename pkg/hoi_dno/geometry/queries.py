"""
Point and ray queries against triangle meshes

Batched kernels take many query points at once. With bvh=None the
(query, face) candidates are all pairs, processed in chunks; with a Bvh
they are pruned by the hierarchy first. Single-point wrappers use the
mesh's cached BVH.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.spatial import cKDTree

from ..config import DefaultsConfig
from ..exceptions import DegenerateRayError
from .bvh import Bvh
from .mesh import TriMesh, require_watertight

logger = logging.getLogger(__name__)

_CHUNK_PAIRS = 2_000_000


@dataclass
class NearestResult:
    """Per query: closest surface point, distance, face id, barycentric weights"""
    points: np.ndarray
    distances: np.ndarray
    face_ids: np.ndarray
    weights: np.ndarray


# ----------------------------------------------------------------------
# Exact kernels
# ----------------------------------------------------------------------

def closest_point_on_triangles(p: np.ndarray, a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    """
    Barycentric weights of the closest point on each triangle

    All inputs are (K, 3); returns (K, 3) weights (wa, wb, wc) summing to 1.
    Voronoi-region classification; later assignments take priority.
    """
    ab, ac, ap = b - a, c - a, p - a
    bp, cp = p - b, p - c
    d1 = np.einsum("ij,ij->i", ab, ap)
    d2 = np.einsum("ij,ij->i", ac, ap)
    d3 = np.einsum("ij,ij->i", ab, bp)
    d4 = np.einsum("ij,ij->i", ac, bp)
    d5 = np.einsum("ij,ij->i", ab, cp)
    d6 = np.einsum("ij,ij->i", ac, cp)
    va = d3 * d6 - d5 * d4
    vb = d5 * d2 - d1 * d6
    vc = d1 * d4 - d3 * d2

    def safe(x):
        return np.where(np.abs(x) > 0, x, 1.0)

    w = np.empty((len(p), 3))
    denom = safe(va + vb + vc)
    v = vb / denom
    u = vc / denom
    w[:] = np.column_stack([1.0 - v - u, v, u])

    region = (va <= 0) & (d4 - d3 >= 0) & (d5 - d6 >= 0)
    t = (d4 - d3) / safe((d4 - d3) + (d5 - d6))
    w[region] = np.column_stack([np.zeros_like(t), 1.0 - t, t])[region]

    region = (vb <= 0) & (d2 >= 0) & (d6 <= 0)
    t = d2 / safe(d2 - d6)
    w[region] = np.column_stack([1.0 - t, np.zeros_like(t), t])[region]

    region = (d6 >= 0) & (d5 <= d6)
    w[region] = (0.0, 0.0, 1.0)

    region = (vc <= 0) & (d1 >= 0) & (d3 <= 0)
    t = d1 / safe(d1 - d3)
    w[region] = np.column_stack([1.0 - t, t, np.zeros_like(t)])[region]

    region = (d3 >= 0) & (d4 <= d3)
    w[region] = (0.0, 1.0, 0.0)

    region = (d1 <= 0) & (d2 <= 0)
    w[region] = (1.0, 0.0, 0.0)
    return w


def ray_triangle(
    origins: np.ndarray,
    directions: np.ndarray,
    a: np.ndarray,
    b: np.ndarray,
    c: np.ndarray,
    graze: float = DefaultsConfig.RAY_GRAZE_EPS,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Moller-Trumbore over paired rays and triangles

    Returns:
        (hit mask within the graze band, t, edge margin). The margin is the
        smallest barycentric coordinate; a hit with margin < graze passes
        within the graze band of an edge.
    """
    e1, e2 = b - a, c - a
    pvec = np.cross(directions, e2)
    det = np.einsum("ij,ij->i", e1, pvec)
    parallel = np.abs(det) < 1e-18
    inv = 1.0 / np.where(parallel, 1.0, det)
    tvec = origins - a
    u = np.einsum("ij,ij->i", tvec, pvec) * inv
    qvec = np.cross(tvec, e1)
    v = np.einsum("ij,ij->i", directions, qvec) * inv
    t = np.einsum("ij,ij->i", e2, qvec) * inv
    margin = np.minimum(np.minimum(u, v), 1.0 - u - v)
    hit = ~parallel & (margin >= -graze) & (t > 0.0)
    return hit, t, margin


# ----------------------------------------------------------------------
# Candidate generation
# ----------------------------------------------------------------------

def _all_pairs(n_queries: int, n_faces: int, begin: int, end: int) -> Tuple[np.ndarray, np.ndarray]:
    q = np.repeat(np.arange(begin, end), n_faces)
    f = np.tile(np.arange(n_faces), end - begin)
    return q, f


def _chunks(n_queries: int, n_faces: int):
    step = max(1, _CHUNK_PAIRS // max(n_faces, 1))
    for begin in range(0, n_queries, step):
        yield begin, min(n_queries, begin + step)


# ----------------------------------------------------------------------
# Nearest point
# ----------------------------------------------------------------------

def nearest_points(points: np.ndarray, mesh: TriMesh, bvh: Optional[Bvh] = None) -> NearestResult:
    """
    Exact closest surface point for every query point

    Args:
        points: (Q, 3)
        mesh: Target mesh
        bvh: Optional hierarchy for pruning (exhaustive over faces otherwise)
    """
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    n = len(points)
    tri = mesh.triangles
    best_d = np.full(n, np.inf)
    best_f = np.zeros(n, dtype=np.int64)
    best_w = np.zeros((n, 3))

    def consume(pq: np.ndarray, pf: np.ndarray) -> None:
        if not len(pq):
            return
        w = closest_point_on_triangles(points[pq], tri[pf, 0], tri[pf, 1], tri[pf, 2])
        q = np.einsum("ij,ijk->ik", w, tri[pf])
        d = np.linalg.norm(points[pq] - q, axis=1)
        order = np.lexsort((pf, d, pq))
        pq, pf, w, d = pq[order], pf[order], w[order], d[order]
        first = np.ones(len(pq), dtype=bool)
        first[1:] = pq[1:] != pq[:-1]
        pq, pf, w, d = pq[first], pf[first], w[first], d[first]
        better = d < best_d[pq]
        ids = pq[better]
        best_d[ids] = d[better]
        best_f[ids] = pf[better]
        best_w[ids] = w[better]

    if bvh is None:
        for begin, end in _chunks(n, len(tri)):
            consume(*_all_pairs(n, len(tri), begin, end))
    else:
        upper, _ = cKDTree(mesh.vertices).query(points)
        pq, pf = bvh.candidates(lambda q, nodes: bvh.box_distance(points[q], nodes) <= upper[q] + 1e-12, n)
        for begin in range(0, len(pq), _CHUNK_PAIRS):
            consume(pq[begin:begin + _CHUNK_PAIRS], pf[begin:begin + _CHUNK_PAIRS])

    surface = np.einsum("ij,ijk->ik", best_w, tri[best_f])
    return NearestResult(points=surface, distances=best_d, face_ids=best_f, weights=best_w)


def nearest_point(p, mesh: TriMesh) -> Tuple[np.ndarray, float, int]:
    """Closest surface point to p: (q, distance, face id)"""
    res = nearest_points(np.asarray(p, dtype=np.float64).reshape(1, 3), mesh, bvh=mesh.bvh())
    return res.points[0], float(res.distances[0]), int(res.face_ids[0])


# ----------------------------------------------------------------------
# Inside test
# ----------------------------------------------------------------------

def random_directions(rng: np.random.Generator, count: int) -> np.ndarray:
    d = rng.standard_normal((count, 3))
    return d / np.linalg.norm(d, axis=1, keepdims=True)


def _first_hits(
    origins: np.ndarray, directions: np.ndarray, mesh: TriMesh, bvh: Optional[Bvh]
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per ray: (has hit, face id of first hit, first hit grazes an edge)"""
    n = len(origins)
    tri = mesh.triangles
    best_t = np.full(n, np.inf)
    best_f = np.full(n, -1, dtype=np.int64)
    best_margin = np.zeros(n)

    def consume(pq: np.ndarray, pf: np.ndarray) -> None:
        if not len(pq):
            return
        hit, t, margin = ray_triangle(origins[pq], directions[pq], tri[pf, 0], tri[pf, 1], tri[pf, 2])
        pq, pf, t, margin = pq[hit], pf[hit], t[hit], margin[hit]
        order = np.lexsort((pf, t, pq))
        pq, pf, t, margin = pq[order], pf[order], t[order], margin[order]
        first = np.ones(len(pq), dtype=bool)
        first[1:] = pq[1:] != pq[:-1]
        pq, pf, t, margin = pq[first], pf[first], t[first], margin[first]
        better = t < best_t[pq]
        ids = pq[better]
        best_t[ids] = t[better]
        best_f[ids] = pf[better]
        best_margin[ids] = margin[better]

    if bvh is None:
        for begin, end in _chunks(n, len(tri)):
            consume(*_all_pairs(n, len(tri), begin, end))
    else:
        pq, pf = bvh.candidates(lambda q, nodes: bvh.ray_hits_box(origins[q], directions[q], nodes), n)
        for begin in range(0, len(pq), _CHUNK_PAIRS):
            consume(pq[begin:begin + _CHUNK_PAIRS], pf[begin:begin + _CHUNK_PAIRS])

    has_hit = best_f >= 0
    grazing = has_hit & (best_margin < DefaultsConfig.RAY_GRAZE_EPS)
    return has_hit, best_f, grazing


def points_in_mesh(
    points: np.ndarray,
    mesh: TriMesh,
    directions: Optional[np.ndarray] = None,
    seed: int = 0,
    bvh: Optional[Bvh] = None,
    cull: bool = True,
) -> np.ndarray:
    """
    Single-ray inside test for many points

    A point is inside iff the first surface hit along its ray is a back face
    (face normal pointing along the ray). Points outside the mesh bounds are
    reported outside without casting.

    Args:
        points: (Q, 3)
        mesh: Watertight mesh
        directions: (Q, 3) unit ray directions; drawn from seed when omitted
        seed: Seed for initial directions and for re-casts of grazing rays
        bvh: Optional hierarchy
        cull: Skip rays for points outside the mesh bounding box

    Raises:
        NotWatertightError: If mesh is not watertight
        DegenerateRayError: If a ray still grazes an edge after all retries
    """
    require_watertight(mesh)
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    rng = np.random.default_rng(seed)
    if directions is None:
        directions = random_directions(rng, len(points))
    directions = np.asarray(directions, dtype=np.float64).reshape(-1, 3)

    inside = np.zeros(len(points), dtype=bool)
    active = np.arange(len(points))
    if cull:
        lo, hi = mesh.bounds
        active = active[np.all((points >= lo) & (points <= hi), axis=1)]
    if not len(active):
        return inside

    normals = mesh.face_normals
    dirs = directions[active].copy()
    for attempt in range(DefaultsConfig.RAY_MAX_RETRIES + 1):
        has_hit, faces, grazing = _first_hits(points[active], dirs, mesh, bvh)
        settled = ~grazing
        ids = active[settled]
        back = has_hit[settled] & (np.einsum("ij,ij->i", normals[faces[settled]], dirs[settled]) > 0)
        inside[ids] = back
        active, dirs = active[grazing], dirs[grazing]
        if not len(active):
            return inside
        logger.debug("re-casting %d grazing rays (attempt %d)", len(active), attempt + 1)
        dirs = random_directions(rng, len(active))
    raise DegenerateRayError(points[active[0]], DefaultsConfig.RAY_MAX_RETRIES)


def point_in_mesh(p, mesh: TriMesh, ray_dir=None, seed: int = 0) -> bool:
    """Single-point inside test along ray_dir (seeded random when omitted)"""
    dirs = None if ray_dir is None else np.asarray(ray_dir, dtype=np.float64).reshape(1, 3)
    return bool(points_in_mesh(np.asarray(p).reshape(1, 3), mesh, directions=dirs, seed=seed, bvh=mesh.bvh())[0])

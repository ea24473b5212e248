"""
Bidirectional mesh penetration loss

For meshes A and B:

    L_pen(A -> B) = (1 / |V_A|) * sum over v in V_A inside B of ||v - NN(v; B)||^2

and the loss is L_pen(A -> B) + L_pen(B -> A). Inside membership is decided
on the forward values and held fixed for backward; the nearest point is
written as fixed barycentric weights times gathered face corners, so
gradients reach the vertices of both meshes.
"""

from typing import Optional, Union

import numpy as np

from ..numerics import Tensor, as_tensor
from .bvh import Bvh
from .mesh import TriMesh, require_watertight
from .queries import nearest_points, points_in_mesh, random_directions

ArrayLike = Union[Tensor, np.ndarray]


def _frames(values: np.ndarray) -> np.ndarray:
    return values[None] if values.ndim == 2 else values


def penetration_term(
    points: ArrayLike,
    target: TriMesh,
    target_vertices: Optional[ArrayLike] = None,
    bvh: Optional[Bvh] = None,
    seed: int = 0,
) -> Tensor:
    """
    One direction of the penetration loss, averaged over frames

    Args:
        points: (N, 3) or (F, N, 3) query vertices (Tensor for gradients)
        target: Watertight mesh providing faces (and vertices when
            target_vertices is omitted)
        target_vertices: (M, 3) or (F, M, 3) posed target vertices; the
            target is static when omitted, and bvh may then accelerate queries
        bvh: Hierarchy over the static target
        seed: Seed of the per-(frame, vertex) ray directions

    Returns:
        Scalar tensor: sum of squared projection distances of inside points,
        divided by N and by the number of frames
    """
    require_watertight(target)
    pts = as_tensor(points)
    p_np = _frames(pts.data)
    n_frames, n_points = p_np.shape[:2]

    dynamic = target_vertices is not None
    if dynamic:
        tv = as_tensor(target_vertices)
        tv_np = _frames(tv.data)
        if len(tv_np) == 1 and n_frames > 1:
            tv_np = np.broadcast_to(tv_np, (n_frames,) + tv_np.shape[1:])

    directions = random_directions(np.random.default_rng(seed), n_frames * n_points).reshape(n_frames, n_points, 3)

    frame_ids, vertex_ids, face_ids, weights = [], [], [], []
    if not dynamic:
        flat = p_np.reshape(-1, 3)
        inside = points_in_mesh(flat, target, directions=directions.reshape(-1, 3), seed=seed, bvh=bvh)
        hit = np.nonzero(inside)[0]
        if len(hit):
            res = nearest_points(flat[hit], target, bvh=bvh)
            frame_ids.append(hit // n_points)
            vertex_ids.append(hit % n_points)
            face_ids.append(res.face_ids)
            weights.append(res.weights)
    else:
        for f in range(n_frames):
            mesh_f = TriMesh.unchecked(tv_np[f], target.faces, name=target.name, watertight=True)
            inside = points_in_mesh(p_np[f], mesh_f, directions=directions[f], seed=seed + f)
            hit = np.nonzero(inside)[0]
            if not len(hit):
                continue
            res = nearest_points(p_np[f][hit], mesh_f)
            frame_ids.append(np.full(len(hit), f))
            vertex_ids.append(hit)
            face_ids.append(res.face_ids)
            weights.append(res.weights)

    if not frame_ids:
        return Tensor(0.0)

    fi = np.concatenate(frame_ids)
    vi = np.concatenate(vertex_ids)
    corners = target.faces[np.concatenate(face_ids)]
    w = Tensor._wrap(np.concatenate(weights)[:, :, None])

    p_sel = pts[(fi, vi)] if pts.ndim == 3 else pts[vi]
    if dynamic:
        tv_t = tv if tv.ndim == 3 else tv.reshape((1,) + tv.shape)
        if tv_t.shape[0] == 1:
            tri = tv_t[(np.zeros_like(fi)[:, None], corners)]
        else:
            tri = tv_t[(fi[:, None], corners)]
    else:
        tri = Tensor._wrap(target.vertices[corners])
    nearest = (w * tri).sum(axis=1)
    d = p_sel - nearest
    return (d * d).sum() / float(n_points * n_frames)


def penetration_loss(
    mesh_a: TriMesh,
    mesh_b: TriMesh,
    vertices_a: Optional[ArrayLike] = None,
    vertices_b: Optional[ArrayLike] = None,
    seed: int = 0,
) -> Tensor:
    """
    Symmetric penetration loss between two watertight meshes (m²)

    vertices_a / vertices_b override the mesh vertices, typically with
    tensors that require gradients; shapes may carry a leading frame axis.
    """
    require_watertight(mesh_a)
    require_watertight(mesh_b)
    va = as_tensor(vertices_a if vertices_a is not None else mesh_a.vertices)
    vb = as_tensor(vertices_b if vertices_b is not None else mesh_b.vertices)
    a_in_b = penetration_term(va, mesh_b, target_vertices=vb, seed=seed)
    b_in_a = penetration_term(vb, mesh_a, target_vertices=va, seed=seed + 7919)
    return a_in_b + b_in_a

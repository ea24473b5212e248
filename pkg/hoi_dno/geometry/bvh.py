"""
Axis-aligned bounding-box hierarchy over mesh faces

Queries are batched: a frontier of (query, node) pairs is expanded level by
level with a vectorized box test, and surviving leaves are flattened into
(query, face) candidate pairs for the exact kernels in queries.py.
"""

from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np

from ..config import DefaultsConfig


@dataclass(frozen=True, eq=False)
class Bvh:
    """
    Flattened BVH

    Node i has box [lo[i], hi[i]]; inner nodes have children left[i], right[i];
    leaves (left == -1) own faces order[start[i]:start[i] + count[i]].
    """
    lo: np.ndarray
    hi: np.ndarray
    left: np.ndarray
    right: np.ndarray
    start: np.ndarray
    count: np.ndarray
    order: np.ndarray

    @property
    def node_count(self) -> int:
        return len(self.lo)

    @classmethod
    def build(cls, mesh, leaf_size: int = DefaultsConfig.BVH_LEAF_SIZE) -> "Bvh":
        tri = mesh.triangles
        face_lo = tri.min(axis=1)
        face_hi = tri.max(axis=1)
        centroids = tri.mean(axis=1)

        order = np.arange(len(tri))
        lo, hi, left, right, start, count = [], [], [], [], [], []

        def new_node(begin: int, end: int) -> int:
            ids = order[begin:end]
            lo.append(face_lo[ids].min(axis=0))
            hi.append(face_hi[ids].max(axis=0))
            left.append(-1)
            right.append(-1)
            start.append(begin)
            count.append(end - begin)
            return len(lo) - 1

        stack = [(new_node(0, len(order)), 0, len(order))]
        while stack:
            node, begin, end = stack.pop()
            if end - begin <= leaf_size:
                continue
            ids = order[begin:end]
            c = centroids[ids]
            axis = int(np.argmax(c.max(axis=0) - c.min(axis=0)))
            order[begin:end] = ids[np.argsort(c[:, axis], kind="stable")]
            mid = (begin + end) // 2
            l_node = new_node(begin, mid)
            r_node = new_node(mid, end)
            left[node] = l_node
            right[node] = r_node
            count[node] = 0
            stack.append((r_node, mid, end))
            stack.append((l_node, begin, mid))

        return cls(
            lo=np.array(lo),
            hi=np.array(hi),
            left=np.array(left, dtype=np.int64),
            right=np.array(right, dtype=np.int64),
            start=np.array(start, dtype=np.int64),
            count=np.array(count, dtype=np.int64),
            order=order,
        )

    def candidates(self, keep: Callable[[np.ndarray, np.ndarray], np.ndarray], n_queries: int) -> Tuple[np.ndarray, np.ndarray]:
        """
        Collect (query, face) pairs from leaves whose boxes pass keep

        Args:
            keep: keep(query_ids, node_ids) -> bool mask
            n_queries: Number of queries

        Returns:
            (query ids, face ids) of equal length
        """
        q = np.arange(n_queries)
        nodes = np.zeros(n_queries, dtype=np.int64)
        leaf_q, leaf_n = [], []
        while q.size:
            mask = keep(q, nodes)
            q, nodes = q[mask], nodes[mask]
            is_leaf = self.left[nodes] < 0
            leaf_q.append(q[is_leaf])
            leaf_n.append(nodes[is_leaf])
            inner_q, inner_n = q[~is_leaf], nodes[~is_leaf]
            q = np.concatenate([inner_q, inner_q])
            nodes = np.concatenate([self.left[inner_n], self.right[inner_n]])

        lq = np.concatenate(leaf_q) if leaf_q else np.zeros(0, dtype=np.int64)
        ln = np.concatenate(leaf_n) if leaf_n else np.zeros(0, dtype=np.int64)
        counts = self.count[ln]
        total = int(counts.sum())
        pair_q = np.repeat(lq, counts)
        first = np.cumsum(counts) - counts
        offsets = np.repeat(self.start[ln] - first, counts) + np.arange(total)
        return pair_q, self.order[offsets]

    def box_distance(self, points: np.ndarray, nodes: np.ndarray) -> np.ndarray:
        """Distance from each point to its paired node box (0 inside)"""
        d = np.maximum(np.maximum(self.lo[nodes] - points, points - self.hi[nodes]), 0.0)
        return np.sqrt((d * d).sum(axis=1))

    def ray_hits_box(self, origins: np.ndarray, directions: np.ndarray, nodes: np.ndarray) -> np.ndarray:
        """Slab test for rays t >= 0 against paired node boxes"""
        with np.errstate(divide="ignore", invalid="ignore"):
            inv = 1.0 / directions
            t0 = (self.lo[nodes] - origins) * inv
            t1 = (self.hi[nodes] - origins) * inv
        t_near = np.nanmax(np.minimum(t0, t1), axis=1)
        t_far = np.nanmin(np.maximum(t0, t1), axis=1)
        return t_far >= np.maximum(t_near, 0.0)

    def contains_faces_once(self) -> bool:
        """Structural check: leaves partition the faces"""
        leaves = self.left < 0
        ids = np.concatenate([self.order[s:s + c] for s, c in zip(self.start[leaves], self.count[leaves])])
        return len(ids) == len(self.order) and len(np.unique(ids)) == len(ids)

    def nested(self) -> bool:
        """Structural check: every parent box contains its children"""
        inner = np.nonzero(self.left >= 0)[0]
        ok = True
        for child in (self.left[inner], self.right[inner]):
            ok &= bool(np.all(self.lo[inner] <= self.lo[child] + 1e-15))
            ok &= bool(np.all(self.hi[inner] >= self.hi[child] - 1e-15))
        return ok

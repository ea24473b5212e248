"""
Rotation conversions

cont6d holds the first two columns of a rotation matrix; decoding normalizes
the first column and Gram-Schmidt orthogonalizes the second against it. The
Tensor versions are differentiable; the *_np versions serve data synthesis,
inverse kinematics and metrics.
"""

import numpy as np
from scipy.spatial.transform import Rotation

from ..config import DefaultsConfig
from ..exceptions import DegenerateRotationError
from ..numerics import Tensor, as_tensor
from ..numerics import functional as fn
from ..numerics import primitives as P

IDENTITY_6D = np.array([1.0, 0.0, 0.0, 0.0, 1.0, 0.0])


def check_cont6d(c: np.ndarray) -> None:
    """Raise if any cont6d vector has a short column or near-parallel columns"""
    c = np.asarray(c).reshape(-1, 6)
    a1, a2 = c[:, :3], c[:, 3:]
    n1 = np.linalg.norm(a1, axis=1)
    n2 = np.linalg.norm(a2, axis=1)
    eps = DefaultsConfig.ROT6D_EPS
    if np.any(n1 <= eps) or np.any(n2 <= eps):
        bad = int(np.argmin(np.minimum(n1, n2)))
        raise DegenerateRotationError(f"cont6d entry {bad} has a column with norm <= {eps}")
    sin_angle = np.linalg.norm(np.cross(a1, a2), axis=1) / (n1 * n2)
    if np.any(sin_angle <= eps):
        bad = int(np.argmin(sin_angle))
        raise DegenerateRotationError(f"cont6d entry {bad} has parallel columns")
    if not np.all(np.isfinite(c)):
        raise DegenerateRotationError("cont6d contains non-finite values")


def cont6d_to_rotmat(c, check: bool = True) -> Tensor:
    """
    Decode (..., 6) cont6d into (..., 3, 3) rotation matrices

    Raises:
        DegenerateRotationError: when check is on and an entry is degenerate
    """
    c = as_tensor(c)
    if check:
        check_cont6d(c.data)
    b1 = fn.normalize(c[..., 0:3])
    a2 = c[..., 3:6]
    proj = fn.dot(b1, a2)
    b2 = fn.normalize(a2 - b1 * P.reshape(proj, proj.shape + (1,)))
    b3 = fn.cross(b1, b2)
    return P.stack([b1, b2, b3], axis=-1)


def rotmat_to_cont6d(R) -> Tensor:
    R = as_tensor(R)
    return P.concat([R[..., :, 0], R[..., :, 1]], axis=-1)


def cont6d_to_rotmat_np(c: np.ndarray) -> np.ndarray:
    c = np.asarray(c, dtype=np.float64)
    b1 = c[..., 0:3] / np.linalg.norm(c[..., 0:3], axis=-1, keepdims=True)
    a2 = c[..., 3:6]
    b2 = a2 - (b1 * a2).sum(axis=-1, keepdims=True) * b1
    b2 = b2 / np.linalg.norm(b2, axis=-1, keepdims=True)
    return np.stack([b1, b2, np.cross(b1, b2)], axis=-1)


def rotmat_to_cont6d_np(R: np.ndarray) -> np.ndarray:
    R = np.asarray(R, dtype=np.float64)
    return np.concatenate([R[..., :, 0], R[..., :, 1]], axis=-1)


def rot_z_np(angle) -> np.ndarray:
    """(..., 3, 3) rotations about +z"""
    angle = np.asarray(angle, dtype=np.float64)
    c, s = np.cos(angle), np.sin(angle)
    zero, one = np.zeros_like(angle), np.ones_like(angle)
    return np.stack(
        [np.stack([c, -s, zero], -1), np.stack([s, c, zero], -1), np.stack([zero, zero, one], -1)],
        axis=-2,
    )


def rot_z(angle: Tensor) -> Tensor:
    """Differentiable (..., 3, 3) rotations about +z"""
    angle = as_tensor(angle)
    c, s = P.cos(angle), P.sin(angle)
    zero = Tensor._wrap(np.zeros(angle.shape))
    one = Tensor._wrap(np.ones(angle.shape))
    rows = [P.stack([c, -s, zero], axis=-1), P.stack([s, c, zero], axis=-1), P.stack([zero, zero, one], axis=-1)]
    return P.stack(rows, axis=-2)


def heading_np(R: np.ndarray) -> np.ndarray:
    """
    Yaw of the forward axis

    Forward is R @ (0, 1, 0); heading 0 faces +y and grows counter-clockwise
    about +z.
    """
    forward = np.asarray(R)[..., :, 1]
    return np.arctan2(-forward[..., 0], forward[..., 1])


def wrap_angle(angle):
    return (np.asarray(angle) + np.pi) % (2.0 * np.pi) - np.pi


def rotvec_to_rotmat(v: np.ndarray) -> np.ndarray:
    return Rotation.from_rotvec(np.asarray(v, dtype=np.float64).reshape(-1, 3)).as_matrix().reshape(np.shape(v)[:-1] + (3, 3))


def rotmat_to_rotvec(R: np.ndarray) -> np.ndarray:
    R = np.asarray(R, dtype=np.float64)
    return Rotation.from_matrix(R.reshape(-1, 3, 3)).as_rotvec().reshape(R.shape[:-2] + (3,))


def random_rotations(count: int, seed: int = 0) -> np.ndarray:
    return Rotation.random(count, random_state=seed).as_matrix()


def geodesic_angle_np(R_a: np.ndarray, R_b: np.ndarray) -> np.ndarray:
    """Angle of R_a^T R_b in radians"""
    rel = np.swapaxes(R_a, -1, -2) @ R_b
    cos = np.clip((np.trace(rel, axis1=-2, axis2=-1) - 1.0) / 2.0, -1.0, 1.0)
    return np.arccos(cos)

"""
Contact thresholding and world-space contact targets
"""

from typing import Tuple, Union

import numpy as np

from ..config import DefaultsConfig
from ..numerics import Tensor, as_tensor
from .models import ContactFrame

ArrayLike = Union[np.ndarray, Tensor]


def threshold_contacts(contacts: ContactFrame, tau: float = DefaultsConfig.CONTACT_THRESHOLD) -> ContactFrame:
    """b_a <- [b_a > tau]; ties go to no contact"""
    if not 0.0 < tau < 1.0:
        raise ValueError(f"contact threshold must be in (0, 1), got {tau}")
    return ContactFrame(bits=(contacts.bits > tau).astype(np.float64), points=contacts.points.copy())


def threshold_bits(bits: np.ndarray, tau: float = DefaultsConfig.CONTACT_THRESHOLD) -> np.ndarray:
    return (np.asarray(bits) > tau).astype(np.float64)


def contact_targets(contacts: ContactFrame, rotations: np.ndarray, translations: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    World targets R_O p_a + r_O for every anchor and frame

    Args:
        contacts: Binary contacts with bits (F, A) and points (F, A, 3)
        rotations: (F, 3, 3) object rotations
        translations: (F, 3) object translations

    Returns:
        (targets (F, A, 3), active mask (F, A)); inactive targets are still
        computed but masked out
    """
    targets = np.einsum("fij,faj->fai", rotations, contacts.points) + translations[:, None, :]
    return targets, contacts.bits > 0.5


def contact_targets_tensor(points: ArrayLike, rotations: ArrayLike, translations: ArrayLike) -> Tensor:
    """Differentiable variant of contact_targets over (F, A, 3) points"""
    points, rotations, translations = as_tensor(points), as_tensor(rotations), as_tensor(translations)
    n = rotations.shape[0]
    rotated = (rotations.reshape(n, 1, 3, 3) * points.reshape(n, points.shape[1], 1, 3)).sum(axis=-1)
    return rotated + translations.reshape(n, 1, 3)


def count_flips(previous: np.ndarray, current: np.ndarray) -> int:
    """Hamming distance between two thresholded contact matrices"""
    return int(np.count_nonzero(threshold_bits(previous) != threshold_bits(current)))

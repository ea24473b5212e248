"""
Distribution metrics over embeddings and joint tracks
"""

import logging
from typing import Dict, Optional, Sequence

import numpy as np
from scipy import linalg

from ..config import DefaultsConfig
from ..exceptions import MetricError

logger = logging.getLogger(__name__)


def _gaussian(embeddings: np.ndarray, name: str):
    x = np.asarray(embeddings, dtype=np.float64)
    if x.ndim != 2 or len(x) < 2:
        raise MetricError(f"{name}: need at least 2 embeddings of shape (N, E), got {x.shape}")
    return x.mean(axis=0), np.cov(x, rowvar=False).reshape(x.shape[1], x.shape[1])


def frechet_distance(mu1: np.ndarray, sigma1: np.ndarray, mu2: np.ndarray, sigma2: np.ndarray, eps: float = DefaultsConfig.FID_EPS) -> float:
    """||mu1 - mu2||^2 + tr(S1 + S2 - 2 (S1 S2)^(1/2)) with eps * I added to both covariances"""
    k = len(mu1)
    s1 = sigma1 + eps * np.eye(k)
    s2 = sigma2 + eps * np.eye(k)
    if not (np.all(np.isfinite(s1)) and np.all(np.isfinite(s2))):
        raise MetricError("fid: non-finite covariance")
    if min(np.linalg.eigvalsh(s1).min(), np.linalg.eigvalsh(s2).min()) <= 0:
        raise MetricError("fid: covariance is singular after regularization")
    covmean = linalg.sqrtm(s1 @ s2)
    if np.iscomplexobj(covmean):
        covmean = covmean.real
    diff = mu1 - mu2
    value = float(diff @ diff + np.trace(s1) + np.trace(s2) - 2.0 * np.trace(covmean))
    return max(value, 0.0)


def fid(real: np.ndarray, generated: np.ndarray, eps: float = DefaultsConfig.FID_EPS) -> float:
    """
    Frechet distance between Gaussians fitted to two embedding sets

    Identical sets score 0 up to the accuracy of the matrix square root;
    the value is clipped at 0.

    Raises:
        MetricError: Fewer than 2 samples per set, or a singular covariance
    """
    real = np.asarray(real, dtype=np.float64)
    generated = np.asarray(generated, dtype=np.float64)
    mu1, s1 = _gaussian(real, "fid")
    mu2, s2 = _gaussian(generated, "fid")
    return frechet_distance(mu1, s1, mu2, s2, eps)


def diversity(embeddings: np.ndarray, n_pairs: Optional[int] = None, seed: int = 0) -> float:
    """
    Mean distance between pairs of embeddings

    With n_pairs, that many pairs are drawn at random (seeded); otherwise
    every unordered pair is used.
    """
    x = np.asarray(embeddings, dtype=np.float64)
    if len(x) < 2:
        raise MetricError(f"diversity: need at least 2 embeddings, got {len(x)}")
    if n_pairs is None:
        i, j = np.triu_indices(len(x), k=1)
    else:
        rng = np.random.default_rng(seed)
        i = rng.integers(len(x), size=n_pairs)
        j = (i + rng.integers(1, len(x), size=n_pairs)) % len(x)
    return float(np.linalg.norm(x[i] - x[j], axis=1).mean())


def multimodality(groups: Dict[str, np.ndarray], n_pairs: Optional[int] = None, seed: int = 0) -> float:
    """Mean over prompt groups of the within-group diversity; singleton groups are skipped"""
    values = [diversity(g, n_pairs, seed) for g in groups.values() if len(g) >= 2]
    if not values:
        raise MetricError("multimodality: no prompt has at least 2 samples")
    return float(np.mean(values))


def ave(real: Sequence[np.ndarray], generated: Sequence[np.ndarray]) -> float:
    """
    Average variance error

    For each pair of joint tracks (F, J, 3), the per-joint positional
    variance over time is compared; the L2 difference is averaged over
    joints and then over pairs.
    """
    if len(real) != len(generated) or not real:
        raise MetricError(f"ave: need equally many non-zero tracks, got {len(real)} and {len(generated)}")
    errors = []
    for a, b in zip(real, generated):
        va = np.asarray(a, dtype=np.float64).var(axis=0)
        vb = np.asarray(b, dtype=np.float64).var(axis=0)
        errors.append(np.linalg.norm(va - vb, axis=-1).mean())
    return float(np.mean(errors))

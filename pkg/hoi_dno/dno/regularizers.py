"""
Noise-space regularizers

decorrelation_reg keeps optimized noise statistically close to a standard
normal draw: for every channel block it penalizes the squared mean, the
squared deviation of the variance from 1 and the squared lag-1
autocorrelation across frames. Block values are averaged.
"""

from typing import Dict, Optional, Sequence

import numpy as np

from ..config import DefaultsConfig
from ..numerics import Tensor, as_tensor


def decorrelation_terms(
    x: Tensor,
    blocks: Optional[Sequence[slice]] = None,
    eps: float = DefaultsConfig.DECORR_EPS,
) -> Dict[str, Tensor]:
    """
    Block-averaged mean, variance and autocorrelation penalties

    Args:
        x: Noise (..., L, D); frames on the second-to-last axis
        blocks: Channel slices; the whole last axis when omitted
        eps: Floor of the autocorrelation denominator

    Returns:
        {"mean", "var", "autocorr"} scalars
    """
    x = as_tensor(x)
    blocks = list(blocks) if blocks else [slice(0, x.shape[-1])]
    mean_t = var_t = auto_t = Tensor(0.0)
    for block in blocks:
        xb = x[..., block]
        m = xb.mean()
        centered = xb - m
        v = (centered * centered).mean()
        lagged = (xb[..., 1:, :] * xb[..., :-1, :]).mean()
        rho = lagged / ((xb * xb).mean() + eps)
        mean_t = mean_t + m * m
        var_t = var_t + (v - 1.0) * (v - 1.0)
        auto_t = auto_t + rho * rho
    k = 1.0 / len(blocks)
    return {"mean": mean_t * k, "var": var_t * k, "autocorr": auto_t * k}


def decorrelation_reg(
    x: Tensor,
    blocks: Optional[Sequence[slice]] = None,
    eps: float = DefaultsConfig.DECORR_EPS,
) -> Tensor:
    terms = decorrelation_terms(x, blocks, eps)
    return terms["mean"] + terms["var"] + terms["autocorr"]


def difference_penalty(x: Tensor, x_init: np.ndarray) -> Tensor:
    """||x - x_init||^2"""
    d = as_tensor(x) - Tensor._wrap(np.asarray(x_init, dtype=np.float64))
    return (d * d).sum()

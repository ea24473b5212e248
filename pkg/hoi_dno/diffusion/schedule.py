"""
Cosine noise schedule
"""

import numpy as np

from ..config import DefaultsConfig
from ..exceptions import ScheduleError
from .models import Schedule


def cosine_schedule(
    steps: int,
    offset: float = DefaultsConfig.COSINE_OFFSET,
    beta_max: float = DefaultsConfig.BETA_MAX,
) -> Schedule:
    """
    Cosine alpha-bar curve sampled at `steps` points, betas clipped at beta_max

    Args:
        steps: T
        offset: Small shift keeping beta_1 away from zero
        beta_max: Upper clip on every beta

    Returns:
        Schedule with strictly decreasing alpha_bars starting at 1
    """
    if steps < 1:
        raise ScheduleError(f"schedule needs at least one step, got {steps}")
    t = np.arange(steps + 1, dtype=np.float64) / steps
    f = np.cos((t + offset) / (1.0 + offset) * np.pi / 2.0) ** 2
    curve = f / f[0]
    betas = np.clip(1.0 - curve[1:] / curve[:-1], 0.0, beta_max)
    alphas = 1.0 - betas
    alpha_bars = np.concatenate([[1.0], np.cumprod(alphas)])
    return Schedule(alphas=alphas, alpha_bars=alpha_bars)

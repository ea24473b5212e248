"""
Classifier-guided sampling

The ablation that replaces noise optimization by nudging every step of a
long stochastic sampler along the gradient of the task objective. The
timestep embedding is continuous (t/T), so a model trained with a short
schedule can be sampled with the long one used here.
"""

import logging
from typing import Callable, Optional, Sequence, Union

import numpy as np
from tqdm import tqdm

from ..config import DefaultsConfig
from ..numerics import Tensor, as_tensor
from ..numerics import primitives as P
from ..representation import RootTransform
from .models import ConditionSet
from .sampler import ArrayLike, DenoiseFn, ddpm_sample
from .schedule import cosine_schedule

logger = logging.getLogger(__name__)


def classifier_guidance_sample(
    denoise_fn: DenoiseFn,
    prefix: ArrayLike,
    conds: Union[ConditionSet, Sequence[ConditionSet]],
    n_segments: int,
    segment_shape: Sequence[int],
    objective: Optional[Callable[[int, np.ndarray, Tensor], Tensor]],
    scale: float,
    seed: int = 0,
    steps: int = DefaultsConfig.GUIDANCE_STEPS,
    next_root: Optional[Callable[[np.ndarray, int], RootTransform]] = None,
    verbose: bool = False,
) -> Tensor:
    """
    Guided DDPM rollout

    Args:
        denoise_fn: x0 predictor
        prefix: (P, D) clean seed frames
        conds: Shared or per-segment conditioning
        n_segments: Segments to generate
        segment_shape: (L, D) of one segment
        objective: objective(n, context, x0) -> scalar for segment n, where
            context holds the frames stitched so far; None disables guidance
        scale: Guidance scale (0 gives the plain DDPM sample)
        seed: Seeds the initial noise and every step's noise draw
        steps: Sampler length T
        next_root: As in rollout

    Returns:
        Stitched features (P + n * L, D), prefix included
    """
    if scale < 0:
        raise ValueError(f"guidance scale must be >= 0, got {scale}")
    schedule = cosine_schedule(steps)
    rng = np.random.default_rng(seed)
    if isinstance(conds, ConditionSet):
        conds = [conds] * n_segments
    stitched = as_tensor(prefix)
    p = stitched.shape[0]
    for n in tqdm(range(n_segments), disable=not verbose, desc="guided segments"):
        start = stitched.shape[0] - p
        cond = conds[n]
        if n > 0 and next_root is not None:
            cond = cond.with_root(next_root(stitched.data, start))
        x_T = rng.standard_normal(tuple(segment_shape))
        context = stitched.data
        guide = (lambda x0, n=n, context=context: objective(n, context, x0)) if objective is not None else None
        segment = ddpm_sample(denoise_fn, x_T, stitched[start:], cond, schedule, rng, guide=guide, scale=scale)
        stitched = P.concat([stitched, segment], axis=0)
    logger.debug("guided sampling: %d segments, T=%d, scale %.3g", n_segments, steps, scale)
    return stitched

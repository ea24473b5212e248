"""
Forward noising, DDIM and DDPM samplers and autoregressive rollout

A denoise function maps (prev, x_t, cond) to an x0 estimate; Denoiser
instances qualify, and so do hand-written stand-ins in tests. The DDIM
sampler is deterministic and differentiable w.r.t. x_T, with each step
wrapped in a recomputation checkpoint when a tape is recording.
"""

import logging
from functools import partial
from typing import Callable, List, Optional, Sequence, Union

import numpy as np

from ..numerics import Tape, Tensor, active_tape, as_tensor, backward, no_grad
from ..numerics import primitives as P
from ..representation import RootTransform
from .models import ConditionSet, Schedule

logger = logging.getLogger(__name__)

ArrayLike = Union[np.ndarray, Tensor]
DenoiseFn = Callable[[Tensor, Tensor, ConditionSet], Tensor]
FixFn = Callable[[Tensor], Tensor]


def q_sample(schedule: Schedule, x0: ArrayLike, t: int, eps: ArrayLike) -> ArrayLike:
    """
    x_t = sqrt(abar_t) x0 + sqrt(1 - abar_t) eps

    Raises:
        ScheduleError: If t is outside [0, T]
    """
    ab = schedule.alpha_bar(t)
    if isinstance(x0, Tensor) or isinstance(eps, Tensor):
        return as_tensor(x0) * np.sqrt(ab) + as_tensor(eps) * np.sqrt(1.0 - ab)
    return np.sqrt(ab) * np.asarray(x0) + np.sqrt(1.0 - ab) * np.asarray(eps)


def ddim_update(schedule: Schedule, x_t: Tensor, x0: Tensor, t: int, t_prev: int) -> Tensor:
    """Deterministic step from t to t_prev; t_prev = 0 returns x0 itself"""
    if t_prev == 0:
        return x0
    ab, ab_prev = schedule.alpha_bar(t), schedule.alpha_bar(t_prev)
    eps = (x_t - x0 * np.sqrt(ab)) * (1.0 / np.sqrt(1.0 - ab))
    return x0 * np.sqrt(ab_prev) + eps * np.sqrt(1.0 - ab_prev)


def _ddim_step(
    denoise_fn: DenoiseFn,
    schedule: Schedule,
    cond: ConditionSet,
    fix: Optional[FixFn],
    t: int,
    x_t: Tensor,
    prev: Tensor,
) -> Tensor:
    x0 = denoise_fn(prev, x_t, cond.at(t / schedule.T))
    if fix is not None:
        x0 = fix(x0)
    return ddim_update(schedule, x_t, x0, t, t - 1)


def ddim_sample(
    denoise_fn: DenoiseFn,
    x_T: ArrayLike,
    prev: ArrayLike,
    cond: ConditionSet,
    schedule: Schedule,
    fix: Optional[FixFn] = None,
    checkpointed: bool = True,
) -> Tensor:
    """
    Deterministic DDIM from x_T down to x0

    Args:
        denoise_fn: x0 predictor
        x_T: Initial noise (segment_length, D)
        prev: Clean prefix frames
        cond: Segment conditioning (its t is set per step)
        schedule: Noise schedule; T steps are taken
        fix: Applied to every x0 estimate (channel overwrite in inpainting)
        checkpointed: Recompute each step's activations on backward instead
            of keeping them on the tape

    Returns:
        The final x0 estimate
    """
    x, prev = as_tensor(x_T), as_tensor(prev)
    recording = active_tape() is not None
    for t in range(schedule.T, 0, -1):
        step = partial(_ddim_step, denoise_fn, schedule, cond, fix, t)
        if checkpointed and recording and (x.requires_grad or prev.requires_grad):
            x = P.checkpoint(step, x, prev)
        else:
            x = step(x, prev)
    return x


def ddpm_sample(
    denoise_fn: DenoiseFn,
    x_T: ArrayLike,
    prev: ArrayLike,
    cond: ConditionSet,
    schedule: Schedule,
    rng: np.random.Generator,
    guide: Optional[Callable[[Tensor], Tensor]] = None,
    scale: float = 0.0,
) -> Tensor:
    """
    Stochastic ancestral sampling, optionally guided

    With a guide, the posterior mean at every step is shifted by
    -scale * d guide(x0(x_t)) / d x_t. Noise is drawn at every step whether
    or not guidance is active, so scale 0 reproduces the unguided sample for
    the same generator state.

    Returns:
        Sample as a constant tensor
    """
    x = np.array(as_tensor(x_T).data)
    prev_c = Tensor._wrap(np.array(as_tensor(prev).data))
    for t in range(schedule.T, 0, -1):
        c = cond.at(t / schedule.T)
        noise = rng.standard_normal(x.shape)
        grad = None
        if guide is not None and scale != 0.0:
            with Tape():
                leaf = Tensor(x, requires_grad=True)
                x0_t = denoise_fn(prev_c, leaf, c)
                objective = guide(x0_t)
                grad = backward(objective)[leaf] if objective._tape is not None else np.zeros_like(x)
            x0 = x0_t.data
        else:
            with no_grad():
                x0 = denoise_fn(prev_c, Tensor._wrap(np.array(x)), c).data

        ab, ab_prev, beta = schedule.alpha_bar(t), schedule.alpha_bar(t - 1), schedule.beta(t)
        mean = (np.sqrt(ab_prev) * beta / (1.0 - ab)) * x0 + (np.sqrt(1.0 - beta) * (1.0 - ab_prev) / (1.0 - ab)) * x
        if grad is not None:
            mean = mean - scale * grad
        if t > 1:
            var = beta * (1.0 - ab_prev) / (1.0 - ab)
            x = mean + np.sqrt(var) * noise
        else:
            x = mean
    return Tensor._wrap(x)


def rollout(
    denoise_fn: DenoiseFn,
    prefix: ArrayLike,
    conds: Union[ConditionSet, Sequence[ConditionSet]],
    noises: Sequence[ArrayLike],
    schedule: Schedule,
    fix: Optional[Callable[[int, Tensor], Tensor]] = None,
    next_root: Optional[Callable[[np.ndarray, int], RootTransform]] = None,
    checkpointed: bool = True,
) -> Tensor:
    """
    Autoregressive generation of len(noises) segments

    Segment n conditions on the last prefix-length frames of everything
    generated so far. With next_root, the root token of segment n > 0 is
    re-derived from the stitched features at the first frame of its window.

    Args:
        denoise_fn: x0 predictor
        prefix: (P, D) clean frames seeding the first segment
        conds: One ConditionSet shared by all segments, or one per segment
        noises: One x_T per segment
        schedule: Noise schedule
        fix: fix(n, x0) applied to segment n's x0 estimates
        next_root: (stitched features, window start) -> root transform
        checkpointed: Passed to ddim_sample

    Returns:
        Stitched features (P + n * L, D), prefix included
    """
    stitched = as_tensor(prefix)
    p = stitched.shape[0]
    if isinstance(conds, ConditionSet):
        conds = [conds] * len(noises)
    if len(conds) != len(noises):
        raise ValueError(f"{len(conds)} conditions for {len(noises)} segments")

    segments: List[Tensor] = []
    for n, (cond, x_T) in enumerate(zip(conds, noises)):
        start = stitched.shape[0] - p
        if n > 0 and next_root is not None:
            cond = cond.with_root(next_root(stitched.data, start))
        prev = stitched[start:]
        seg_fix = partial(fix, n) if fix is not None else None
        segment = ddim_sample(denoise_fn, x_T, prev, cond, schedule, fix=seg_fix, checkpointed=checkpointed)
        segments.append(segment)
        stitched = P.concat([stitched, segment], axis=0)
    logger.debug("rolled out %d segments, %d frames", len(segments), stitched.shape[0])
    return stitched

"""
Optimization phases and ablation modes

Phase 1 optimizes the noise against the object-centric objective and
freezes the resulting contact and object channels. Phase 2 optimizes fresh
noise against the human-centric objective while every x0 estimate has the
frozen channels written back, so contacts cannot change.
"""

import logging
from typing import Any, Callable, List, Optional, Tuple

import numpy as np

from ..diffusion import classifier_guidance_sample
from ..dno import DnoConfig, DnoResult, NoiseState, dno_optimize
from ..geometry import nearest_points
from ..losses import DecodedState, GoalSpec, decode_state, loss_human, loss_object
from ..numerics import Tensor, no_grad
from ..numerics import primitives as P
from ..representation import ContactFrame, contact_targets, threshold_bits
from .context import RunContext, root_after
from .models import FrozenChannels

logger = logging.getLogger(__name__)

TargetsFn = Callable[[DecodedState], Tuple[Any, np.ndarray]]


def _optimize(ctx: RunContext, noise: NoiseState, objective, config: DnoConfig, fix=None, verbose: bool = False, desc: str = "dno") -> DnoResult:
    return dno_optimize(
        noise,
        lambda x: ctx.rollout(x, fix=fix),
        objective,
        config,
        bits=ctx.contact_bits,
        blocks=ctx.blocks(),
        verbose=verbose,
        desc=desc,
    )


def object_objective(ctx: RunContext):
    """stitched -> (L_Object, terms) over the generated rows"""
    def objective(stitched: Tensor):
        state = ctx.decode(stitched, human=False)
        total, breakdown = loss_object(state, ctx.mesh, ctx.scene, ctx.goals, ctx.spec.weights, seed=ctx.spec.seed)
        return total, breakdown.terms
    return objective


def freeze_channels(ctx: RunContext, stitched: np.ndarray) -> FrozenChannels:
    """Binarize the contact bits of a generated sequence and fix its contact and object channels"""
    features = np.array(ctx.generated(np.asarray(stitched)))
    layout = ctx.layout
    features[:, layout.contact_bits] = threshold_bits(features[:, layout.contact_bits])
    mask = np.zeros(layout.dim, dtype=bool)
    mask[layout.cp_block] = True
    mask[layout.object_block] = True
    return FrozenChannels(features=features, normalized=ctx.normalizer.normalize(features), mask=mask)


def frozen_fix(ctx: RunContext, frozen: FrozenChannels) -> Callable[[int, Tensor], Tensor]:
    """fix(n, x0) writing segment n's frozen channels into its x0 estimate"""
    length = ctx.segment_length

    def fix(n: int, x0: Tensor) -> Tensor:
        rows = frozen.normalized[n * length:(n + 1) * length]
        return P.where(frozen.mask, Tensor._wrap(rows), x0)
    return fix


def frozen_targets(ctx: RunContext, frozen: FrozenChannels) -> Tuple[np.ndarray, np.ndarray]:
    """World contact targets and active mask implied by the frozen channels"""
    layout = ctx.layout
    f = frozen.features
    state = decode_state(f, ctx.generation_root, ctx.rig, human=False)
    contacts = ContactFrame(
        bits=f[:, layout.contact_bits],
        points=f[:, layout.contact_points].reshape(len(f), ctx.rig.n_anchors, 3),
    )
    return contact_targets(contacts, state.object_rotations.data, state.object_translations.data)


def human_objective(ctx: RunContext, targets: Optional[TargetsFn] = None, frozen: Optional[FrozenChannels] = None):
    """
    stitched -> (L_Human, terms)

    Targets come from targets(state) when given, otherwise from the frozen
    channels.
    """
    fixed = frozen_targets(ctx, frozen) if frozen is not None and targets is None else None

    def objective(stitched: Tensor):
        state = ctx.decode(stitched)
        goal, mask = fixed if fixed is not None else targets(state)
        total, breakdown = loss_human(state, ctx.rig, ctx.mesh, ctx.scene, ctx.spec.weights, goal, mask, seed=ctx.spec.seed)
        return total, breakdown.terms
    return objective


def apply_frozen(ctx: RunContext, stitched: np.ndarray, frozen: FrozenChannels) -> np.ndarray:
    """Denormalized stitched sequence with the frozen channels restored exactly"""
    out = np.array(ctx.normalizer.denormalize(np.asarray(stitched)))
    p = ctx.prefix_frames
    out[p:, frozen.mask] = frozen.features[:, frozen.mask]
    return out


def run_phase1(ctx: RunContext, verbose: bool = False) -> Tuple[DnoResult, FrozenChannels]:
    """Object-centric optimization; returns the result and the channels it freezes"""
    noise = ctx.draw_noise(ctx.spec.seed)
    result = _optimize(ctx, noise, object_objective(ctx), ctx.spec.phase1, verbose=verbose, desc="phase 1")
    frozen = freeze_channels(ctx, result.output_best)
    logger.info(
        "phase 1: best objective %.6g at iteration %d, %d active contacts",
        result.best_objective, result.best_iteration, int(frozen.features[:, ctx.layout.contact_bits].sum()),
    )
    return result, frozen


def run_phase2(
    ctx: RunContext,
    frozen: FrozenChannels,
    noise: Optional[NoiseState] = None,
    targets: Optional[TargetsFn] = None,
    verbose: bool = False,
    config: Optional[DnoConfig] = None,
) -> Tuple[DnoResult, np.ndarray]:
    """
    Human-centric optimization against frozen contacts and object motion

    config defaults to the spec's phase2 settings.

    Returns:
        (result, denormalized stitched sequence with the frozen channels exact)
    """
    if noise is None:
        noise = ctx.draw_noise(ctx.spec.seed + 1)
    result = _optimize(
        ctx, noise, human_objective(ctx, targets, frozen), config if config is not None else ctx.spec.phase2,
        fix=frozen_fix(ctx, frozen), verbose=verbose, desc="phase 2",
    )
    return result, apply_frozen(ctx, result.output_best, frozen)


def run_two_phase(ctx: RunContext, verbose: bool = False) -> Tuple[np.ndarray, List, List, FrozenChannels]:
    phase1, frozen = run_phase1(ctx, verbose)
    noise = None
    if ctx.spec.reuse_phase1_noise:
        noise = NoiseState(x=phase1.x_best.copy(), x_init=phase1.x_best.copy())
    phase2, out = run_phase2(ctx, frozen, noise, verbose=verbose)
    return out, phase1.records, phase2.records, frozen


def live_targets(state: DecodedState) -> Tuple[Tensor, np.ndarray]:
    return state.contact_targets(), state.binary_bits() > 0


def run_single_phase(ctx: RunContext, verbose: bool = False) -> Tuple[np.ndarray, List, Optional[FrozenChannels]]:
    """
    Object and human objectives optimized together with live contacts

    With freeze_contacts, the contact and object channels are instead frozen
    from an inference rollout of the same noise, which makes the run a
    phase 2 on that rollout. Both variants use spec.single_phase.
    """
    noise = ctx.draw_noise(ctx.spec.seed)
    if ctx.spec.freeze_contacts:
        with no_grad():
            stitched = ctx.rollout(noise.x)
        frozen = freeze_channels(ctx, stitched.data)
        result, out = run_phase2(ctx, frozen, noise, verbose=verbose, config=ctx.spec.single_phase)
        return out, result.records, frozen

    def objective(stitched: Tensor):
        state = ctx.decode(stitched)
        obj, obj_terms = loss_object(state, ctx.mesh, ctx.scene, ctx.goals, ctx.spec.weights, seed=ctx.spec.seed)
        goal, mask = live_targets(state)
        hum, hum_terms = loss_human(state, ctx.rig, ctx.mesh, ctx.scene, ctx.spec.weights, goal, mask, seed=ctx.spec.seed)
        return obj + hum, {**obj_terms.terms, **hum_terms.terms}

    result = _optimize(ctx, noise, objective, ctx.spec.single_phase, verbose=verbose, desc="single phase")
    return np.array(ctx.normalizer.denormalize(result.output_best)), result.records, None


def nearest_surface_targets(ctx: RunContext, frozen: FrozenChannels) -> TargetsFn:
    """
    Targets from the closest object surface point of each anchor

    The projection runs on the rest mesh in the object frame of every frame
    and is recomputed for each iterate; the active mask is the frozen bits.
    """
    layout = ctx.layout
    obj = decode_state(frozen.features, ctx.generation_root, ctx.rig, human=False)
    R, t = obj.object_rotations.data, obj.object_translations.data
    mask = frozen.features[:, layout.contact_bits] > 0.5
    bvh = ctx.mesh.bvh()

    def targets(state: DecodedState) -> Tuple[np.ndarray, np.ndarray]:
        anchors = state.anchors.data
        local = np.einsum("fji,faj->fai", R, anchors - t[:, None, :])
        nearest = nearest_points(local.reshape(-1, 3), ctx.mesh, bvh=bvh).points.reshape(local.shape)
        return np.einsum("fij,faj->fai", R, nearest) + t[:, None, :], mask
    return targets


def run_nn_contacts(ctx: RunContext, verbose: bool = False) -> Tuple[np.ndarray, List, List, FrozenChannels]:
    """Phase 1, then phase 2 pulling anchors to their nearest surface points instead of the predicted ones"""
    phase1, frozen = run_phase1(ctx, verbose)
    phase2, out = run_phase2(ctx, frozen, targets=nearest_surface_targets(ctx, frozen), verbose=verbose)
    return out, phase1.records, phase2.records, frozen


def run_inference_only(ctx: RunContext) -> np.ndarray:
    """Plain rollout of the seeded noise; no optimizer"""
    noise = ctx.draw_noise(ctx.spec.seed)
    with no_grad():
        stitched = ctx.rollout(noise.x)
    return np.array(ctx.normalizer.denormalize(stitched.data))


def run_phase1_inference_phase2_dno(ctx: RunContext, verbose: bool = False) -> Tuple[np.ndarray, List, FrozenChannels]:
    """Contacts and object motion from a plain rollout, then phase 2"""
    noise = ctx.draw_noise(ctx.spec.seed)
    with no_grad():
        stitched = ctx.rollout(noise.x)
    frozen = freeze_channels(ctx, stitched.data)
    phase2, out = run_phase2(ctx, frozen, verbose=verbose)
    return out, phase2.records, frozen


def goals_window(goals: GoalSpec, start: int, length: int) -> GoalSpec:
    """Keyframes inside [start, start + length), re-indexed from start"""
    keep = [i for i, f in enumerate(goals.frames) if start <= f < start + length]
    return GoalSpec(
        frames=[goals.frames[i] - start for i in keep],
        translations=goals.translations[keep],
        rotations=goals.rotations[keep],
    )


def run_classifier_guidance(ctx: RunContext, verbose: bool = False) -> np.ndarray:
    """
    Guided ancestral sampling with the combined objective

    Each segment's x0 estimate is decoded from the root that follows the
    frames stitched so far and scored with live contacts.
    """
    length = ctx.segment_length
    p = ctx.prefix_frames
    weights = ctx.spec.weights

    def objective(n: int, context: np.ndarray, x0: Tensor) -> Tensor:
        features = ctx.normalizer.denormalize(x0)
        history = ctx.normalizer.denormalize(context)
        root = root_after(history, ctx.prefix_root, ctx.rig)
        state = decode_state(features, root, ctx.rig)
        goals = goals_window(ctx.goals, len(context) - p, length)
        obj, _ = loss_object(state, ctx.mesh, ctx.scene, goals, weights, seed=ctx.spec.seed)
        goal, mask = live_targets(state)
        hum, _ = loss_human(state, ctx.rig, ctx.mesh, ctx.scene, weights, goal, mask, seed=ctx.spec.seed)
        return obj + hum

    stitched = classifier_guidance_sample(
        ctx.denoiser,
        ctx.prefix,
        ctx.cond,
        ctx.spec.n_segments,
        (length, ctx.dim),
        objective,
        ctx.spec.guidance_scale,
        seed=ctx.spec.seed,
        steps=ctx.spec.guidance_steps,
        next_root=ctx.next_root,
        verbose=verbose,
    )
    return np.array(ctx.normalizer.denormalize(stitched.data))

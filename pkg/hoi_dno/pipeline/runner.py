"""
Run dispatch and the seed-parallel batch driver
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

from tqdm import tqdm

from ..diffusion import Checkpoint, load_checkpoint
from ..rig import RigDef, build_rig
from .artifacts import run_hash, write_run
from .context import RunContext
from .evaluation import evaluate_run
from .models import Mode, RunResult, RunSpec
from .phases import (
    run_classifier_guidance,
    run_inference_only,
    run_nn_contacts,
    run_phase1_inference_phase2_dno,
    run_single_phase,
    run_two_phase,
)

logger = logging.getLogger(__name__)


def execute(ctx: RunContext, verbose: bool = False, sdf_cache: Optional[Union[str, Path]] = None) -> RunResult:
    """Run the RunSpec mode on a prepared context; only the object SDF cache, when given, is written"""
    spec = ctx.spec
    phase1: List = []
    phase2: List = []
    frozen = None
    if spec.mode is Mode.TWO_PHASE:
        features, phase1, phase2, frozen = run_two_phase(ctx, verbose)
    elif spec.mode is Mode.SINGLE_PHASE:
        features, phase2, frozen = run_single_phase(ctx, verbose)
    elif spec.mode is Mode.NN_CONTACTS:
        features, phase1, phase2, frozen = run_nn_contacts(ctx, verbose)
    elif spec.mode is Mode.INFERENCE_ONLY:
        features = run_inference_only(ctx)
    elif spec.mode is Mode.PHASE1_INFERENCE_PHASE2_DNO:
        features, phase2, frozen = run_phase1_inference_phase2_dno(ctx, verbose)
    else:
        features = run_classifier_guidance(ctx, verbose)

    result = RunResult(
        spec=spec,
        features=features,
        root=ctx.prefix_root,
        prefix_frames=ctx.prefix_frames,
        phase1=phase1,
        phase2=phase2,
        frozen=frozen,
        config_hash=run_hash(spec, ctx.checkpoint_hash),
    )
    metrics: Dict[str, Any] = {"mode": spec.mode.value, "seed": spec.seed, "prompt": spec.prompt}
    for name, records in (("phase1", phase1), ("phase2", phase2)):
        if records:
            metrics[f"{name}_objective"] = min(r.objective for r in records)
            metrics[f"{name}_flips"] = sum(r.flips for r in records)
    if spec.evaluate:
        metrics.update(
            evaluate_run(
                result.generated, ctx.generation_root, ctx.rig, ctx.mesh, ctx.goals,
                spec.table_height, ctx.scene.floor_height, seed=spec.seed, sdf_cache=sdf_cache,
            )
        )
    result.metrics = metrics
    return result


def run(
    spec: RunSpec,
    checkpoint: Checkpoint,
    rig: RigDef,
    out_dir: Optional[Union[str, Path]] = None,
    verbose: bool = False,
) -> RunResult:
    """
    Execute one run and, with out_dir, write its run directory

    Raises:
        ArtifactError: Checkpoint trained on another rig
        ConfigError: Prompt outside the checkpoint vocabulary
    """
    ctx = RunContext.build(spec, checkpoint, rig)
    result = execute(ctx, verbose, sdf_cache=out_dir)
    if out_dir is not None:
        write_run(result, rig, out_dir)
    return result


def run_dir_name(spec: RunSpec) -> str:
    return f"{spec.mode.value}_seed{spec.seed:04d}"


def _run_job(job: Tuple[Dict[str, Any], str, str, str]) -> str:
    spec_dict, checkpoint_path, rig_name, out_dir = job
    rig = build_rig(rig_name)
    checkpoint = load_checkpoint(checkpoint_path, rig=rig)
    run(RunSpec.from_dict(spec_dict), checkpoint, rig, out_dir)
    return out_dir


def seed_specs(spec: RunSpec, count: int) -> List[RunSpec]:
    """count copies of spec with consecutive seeds starting at spec.seed"""
    return [replace(spec, seed=spec.seed + i) for i in range(count)]


def run_batch(
    specs: Sequence[RunSpec],
    checkpoint_path: Union[str, Path],
    rig_name: str,
    out_root: Union[str, Path],
    workers: int = 1,
    verbose: bool = False,
) -> List[Path]:
    """
    Run many specs, each in its own process and run directory

    Workers share nothing but the checkpoint file; each run directory is
    named by mode and seed.

    Returns:
        Run directories in spec order
    """
    out_root = Path(out_root)
    jobs = [(s.to_dict(), str(checkpoint_path), rig_name, str(out_root / run_dir_name(s))) for s in specs]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            done = list(tqdm(pool.map(_run_job, jobs), total=len(jobs), disable=not verbose, desc="runs"))
    else:
        done = [_run_job(job) for job in tqdm(jobs, disable=not verbose, desc="runs")]
    logger.info("✓ Finished %d runs under %s", len(done), out_root)
    return [Path(d) for d in done]

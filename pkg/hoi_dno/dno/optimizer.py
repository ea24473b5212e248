"""
Diffusion noise optimization

Minimizes objective(generate(x_T)) + regularizers over the initial noise
x_T of a frozen generator, with gradients through the whole sampler.
Every iteration:

    1. add seeded Gaussian perturbation to x_T
    2. generate, evaluate objective + decorrelation + difference penalty
    3. backpropagate and take one Adam step

The iterate with the lowest objective is returned.
"""

import logging
import time
from pathlib import Path
from typing import Callable, Dict, Optional, Sequence, Tuple, Union

import numpy as np
from tqdm import tqdm

from ..exceptions import OptimizationDivergedError
from ..numerics import Adam, Tape, Tensor, backward, no_grad
from ..representation import count_flips
from .models import DnoConfig, DnoResult, IterateRecord, NoiseState
from .regularizers import decorrelation_reg, difference_penalty

logger = logging.getLogger(__name__)

Generator = Callable[[Tensor], Tensor]
Objective = Callable[[Tensor], Tuple[Tensor, Dict[str, float]]]
BitsFn = Callable[[np.ndarray], np.ndarray]


def dno_optimize(
    x_init: Union[np.ndarray, NoiseState],
    generate: Generator,
    objective: Objective,
    config: DnoConfig,
    bits: Optional[BitsFn] = None,
    blocks: Optional[Sequence[slice]] = None,
    dump_dir: Optional[Union[str, Path]] = None,
    verbose: bool = False,
    desc: str = "dno",
) -> DnoResult:
    """
    Optimize the initial noise of a frozen generator

    Args:
        x_init: Initial noise (any shape) or a NoiseState to resume
        generate: x_T -> generator output, differentiable
        objective: output -> (scalar, term breakdown as floats)
        config: Iterations, learning rate, regularizer weights, seed
        bits: output -> contact bits, for the per-iteration flip count
        blocks: Channel blocks of the decorrelation regularizer
        dump_dir: Where the iterate is written if the objective turns NaN
        verbose: Show a progress bar
        desc: Progress bar label

    Returns:
        DnoResult with the best iterate and the per-iteration records

    Raises:
        OptimizationDivergedError: If the objective becomes NaN or infinite
    """
    state = x_init if isinstance(x_init, NoiseState) else NoiseState(
        x=np.array(x_init, dtype=np.float64), x_init=np.array(x_init, dtype=np.float64)
    )
    rng = np.random.default_rng(config.seed)
    adam = Adam(lr=config.lr, anneal_steps=config.iterations if config.anneal else None, unit_grad=config.unit_grad)
    adam.state = state.adam

    x = state.x
    best_x, best_out, best_iter, best_obj = x.copy(), None, -1, np.inf
    prev_bits: Optional[np.ndarray] = None
    records = []
    start = time.perf_counter()

    for it in tqdm(range(config.iterations), disable=not verbose, desc=desc):
        if config.perturbation > 0:
            x = x + rng.normal(0.0, config.perturbation, size=x.shape)
        with Tape():
            leaf = Tensor(x, requires_grad=True, name="x_T")
            out = generate(leaf)
            obj, terms = objective(out)
            decorr = decorrelation_reg(leaf, blocks)
            diff = difference_penalty(leaf, state.x_init)
            total = obj + decorr * config.decorrelation + diff * config.difference_penalty
            grad = backward(total)[leaf] if total._tape is not None else np.zeros_like(x)

        obj_value = obj.item() if isinstance(obj, Tensor) else float(obj)
        if not np.isfinite(total.item()):
            raise OptimizationDivergedError(it, _dump(dump_dir, it, x))

        flips = 0
        if bits is not None:
            current = bits(out.data)
            flips = count_flips(prev_bits, current) if prev_bits is not None else 0
            prev_bits = current
        records.append(
            IterateRecord(
                iteration=it,
                total=total.item(),
                objective=obj_value,
                terms=dict(terms),
                decorrelation=decorr.item(),
                difference=diff.item(),
                flips=flips,
                wall_time=time.perf_counter() - start if config.record_time else 0.0,
            )
        )
        if obj_value < best_obj:
            best_x, best_out, best_iter, best_obj = x.copy(), np.array(out.data), it, obj_value

        x = adam.step({"x_T": x}, {"x_T": grad})["x_T"]

    if best_out is None:
        with no_grad():
            out = generate(Tensor(x))
            obj, _ = objective(out)
        best_x, best_out, best_obj = x.copy(), np.array(out.data), float(obj.item())

    state.x, state.adam = x, adam.state
    above = config.ceiling is not None and best_obj > config.ceiling
    if above:
        logger.warning("%s: best objective %.6g above ceiling %.6g", desc, best_obj, config.ceiling)
    logger.debug("%s: best objective %.6g at iteration %d", desc, best_obj, best_iter)
    return DnoResult(
        x_best=best_x,
        output_best=best_out,
        best_iteration=best_iter,
        best_objective=float(best_obj),
        x_final=x.copy(),
        records=records,
        above_ceiling=above,
    )


def _dump(dump_dir: Optional[Union[str, Path]], iteration: int, x: np.ndarray) -> Optional[str]:
    if dump_dir is None:
        return None
    path = Path(dump_dir) / f"diverged_iterate_{iteration:05d}.npy"
    path.parent.mkdir(parents=True, exist_ok=True)
    np.save(path, x)
    return str(path)

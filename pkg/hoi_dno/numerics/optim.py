"""
Adam optimizer over named numpy parameter dictionaries

adam_step is the pure update; Adam wraps it with learning-rate annealing and
optional unit-norm gradient scaling, the two variants noise optimization uses.
"""

from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from ..exceptions import NonFiniteGradientError, ShapeError

Params = Dict[str, np.ndarray]


@dataclass
class AdamState:
    """First and second moment estimates plus the step counter"""
    step: int = 0
    m: Params = field(default_factory=dict)
    v: Params = field(default_factory=dict)

    def copy(self) -> "AdamState":
        return AdamState(
            step=self.step,
            m={k: a.copy() for k, a in self.m.items()},
            v={k: a.copy() for k, a in self.v.items()},
        )


def adam_step(
    params: Params,
    grads: Params,
    state: AdamState,
    lr: float = 1e-3,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> Tuple[Params, AdamState]:
    """
    One bias-corrected Adam update

    Args:
        params: name -> parameter array
        grads: name -> gradient array (same shapes)
        state: Moments from the previous step (not mutated)
        lr, beta1, beta2, eps: Usual Adam hyperparameters

    Returns:
        (new params, new state)

    Raises:
        NonFiniteGradientError: If any gradient holds NaN or Inf
        ShapeError: If a gradient or moment shape differs from its parameter
    """
    step = state.step + 1
    bc1 = 1.0 - beta1 ** step
    bc2 = 1.0 - beta2 ** step

    new_params: Params = {}
    new_m: Params = {}
    new_v: Params = {}
    for name, value in params.items():
        g = np.asarray(grads[name], dtype=np.float64)
        if g.shape != value.shape:
            raise ShapeError("adam_step", value.shape, g.shape, f"gradient of '{name}'")
        if not np.all(np.isfinite(g)):
            raise NonFiniteGradientError(name)
        m = state.m.get(name, np.zeros_like(value))
        v = state.v.get(name, np.zeros_like(value))
        if m.shape != value.shape or v.shape != value.shape:
            raise ShapeError("adam_step", value.shape, m.shape, f"moments of '{name}'")

        m = beta1 * m + (1.0 - beta1) * g
        v = beta2 * v + (1.0 - beta2) * (g * g)
        m_hat = m / bc1
        v_hat = v / bc2
        new_params[name] = value - lr * m_hat / (np.sqrt(v_hat) + eps)
        new_m[name] = m
        new_v[name] = v

    return new_params, AdamState(step=step, m=new_m, v=new_v)


class Adam:
    """
    Stateful Adam

    Args:
        lr: Base learning rate
        betas: (beta1, beta2)
        eps: Denominator floor
        anneal_steps: If set, lr decays linearly to 0 over this many steps
        unit_grad: Rescale each gradient to unit L2 norm before the update
    """

    def __init__(
        self,
        lr: float = 1e-3,
        betas: Tuple[float, float] = (0.9, 0.999),
        eps: float = 1e-8,
        anneal_steps: Optional[int] = None,
        unit_grad: bool = False,
    ):
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.anneal_steps = anneal_steps
        self.unit_grad = unit_grad
        self.state = AdamState()

    def current_lr(self) -> float:
        if not self.anneal_steps:
            return self.lr
        frac = min(self.state.step / float(self.anneal_steps), 1.0)
        return self.lr * (1.0 - frac)

    def step(self, params: Params, grads: Params) -> Params:
        if self.unit_grad:
            grads = {k: _unit(g) for k, g in grads.items()}
        new_params, self.state = adam_step(
            params, grads, self.state, self.current_lr(), self.beta1, self.beta2, self.eps
        )
        return new_params


def _unit(g: np.ndarray) -> np.ndarray:
    n = float(np.linalg.norm(g))
    return g / n if n > 0 and np.isfinite(n) else g

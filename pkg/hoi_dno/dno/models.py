"""
Data models for diffusion noise optimization
"""

from dataclasses import asdict, dataclass, field, fields
from typing import Any, Dict, List, Optional

import numpy as np

from ..exceptions import ConfigError, EncodingError
from ..numerics import AdamState


@dataclass
class DnoConfig:
    """
    Optimizer settings of one phase

    perturbation is the std of Gaussian noise added to x_T before every
    forward pass; difference_penalty weighs ||x_T - x_T_init||^2 and
    decorrelation weighs the prior-retention regularizer.
    """
    iterations: int = 300
    lr: float = 0.05
    perturbation: float = 1e-6
    difference_penalty: float = 1e-6
    decorrelation: float = 1e-3
    seed: int = 0
    ceiling: Optional[float] = None  # objective above this at the end is flagged
    anneal: bool = False  # linear lr decay to 0 over the iterations
    unit_grad: bool = False
    record_time: bool = True  # wall_time column; off for byte-identical traces

    def __post_init__(self):
        self.validate()

    def validate(self, prefix: str = "dno") -> None:
        if not isinstance(self.iterations, int) or self.iterations < 0:
            raise ConfigError(f"{prefix}.iterations", f"must be a non-negative integer, got {self.iterations!r}")
        if self.lr < 0:
            raise ConfigError(f"{prefix}.lr", f"must be >= 0, got {self.lr}")
        for name in ("perturbation", "difference_penalty", "decorrelation"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{prefix}.{name}", f"must be >= 0, got {getattr(self, name)}")
        if self.ceiling is not None and self.ceiling < 0:
            raise ConfigError(f"{prefix}.ceiling", f"must be >= 0, got {self.ceiling}")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any], prefix: str = "dno") -> "DnoConfig":
        known = {f.name for f in fields(cls)}
        for key in data:
            if key not in known:
                raise ConfigError(f"{prefix}.{key}", "unknown key")
        try:
            return cls(**data)
        except ConfigError as e:
            raise ConfigError(f"{prefix}.{e.key_path.rsplit('.', 1)[-1]}", e.message)

    @classmethod
    def grab(cls, **overrides: Any) -> "DnoConfig":
        return cls(**{"perturbation": 1e-6, "difference_penalty": 1e-6, **overrides})

    @classmethod
    def omomo(cls, **overrides: Any) -> "DnoConfig":
        return cls(**{"perturbation": 1e-5, "difference_penalty": 1e-5, **overrides})


@dataclass
class NoiseState:
    """x_T of every segment (S, L, D), its initial copy and the Adam moments"""
    x: np.ndarray
    x_init: np.ndarray
    adam: AdamState = field(default_factory=AdamState)

    def __post_init__(self):
        if self.x.shape != self.x_init.shape:
            raise EncodingError(f"noise shape {self.x.shape} != initial {self.x_init.shape}")
        if not np.all(np.isfinite(self.x)):
            raise EncodingError("noise holds non-finite values")

    @classmethod
    def draw(cls, n_segments: int, length: int, dim: int, seed: int = 0) -> "NoiseState":
        x = np.random.default_rng(seed).standard_normal((n_segments, length, dim))
        return cls(x=x, x_init=x.copy())

    @property
    def n_segments(self) -> int:
        return self.x.shape[0]

    def distance(self) -> float:
        return float(np.linalg.norm(self.x - self.x_init))


@dataclass
class IterateRecord:
    """One row of an optimization trace"""
    iteration: int
    total: float
    objective: float
    terms: Dict[str, float]
    decorrelation: float
    difference: float
    flips: int
    wall_time: float = 0.0


@dataclass
class DnoResult:
    """
    Outcome of one optimization run

    x_best is the iterate with the lowest objective; output_best is the
    generator output it produced. x_final is the state after the last step.
    """
    x_best: np.ndarray
    output_best: np.ndarray
    best_iteration: int
    best_objective: float
    x_final: np.ndarray
    records: List[IterateRecord]
    above_ceiling: bool = False

    @property
    def converged(self) -> bool:
        return not self.above_ceiling

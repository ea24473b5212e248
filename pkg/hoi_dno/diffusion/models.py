"""
Data models for the segment denoiser and its noise schedule
"""

from dataclasses import asdict, dataclass, field, fields, replace
from typing import Any, Dict

import numpy as np

from ..exceptions import ConfigError, ScheduleError
from ..geometry import TriMesh, sample_surface
from ..representation import RootTransform


@dataclass(frozen=True)
class Schedule:
    """
    Discrete variance schedule

    alphas[t-1] is alpha_t for t in 1..T; alpha_bars has T+1 entries with
    alpha_bars[0] = 1 so that step 0 is the clean sample.
    """
    alphas: np.ndarray
    alpha_bars: np.ndarray

    @property
    def T(self) -> int:
        return len(self.alphas)

    def check_step(self, t: int) -> int:
        if not 0 <= int(t) <= self.T:
            raise ScheduleError(f"step {t} outside [0, {self.T}]")
        return int(t)

    def alpha_bar(self, t: int) -> float:
        return float(self.alpha_bars[self.check_step(t)])

    def beta(self, t: int) -> float:
        t = self.check_step(t)
        if t == 0:
            raise ScheduleError("beta is undefined at step 0")
        return float(1.0 - self.alphas[t - 1])


@dataclass
class DenoiserConfig:
    """
    Shape of the segment denoiser

    feature_dim is D of the rig's feature layout, segment_length the number of
    generated frames per segment (L) and prefix_length the number of clean
    frames of the previous segment the model conditions on.
    """
    feature_dim: int
    vocab_size: int
    segment_length: int = 100
    prefix_length: int = 15
    n_layers: int = 4
    hidden: int = 128
    heads: int = 4
    n_points: int = 64  # V
    point_width: int = 64  # C
    ff_mult: int = 2
    steps: int = 8  # T
    type_embeddings: bool = True

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        for name in ("feature_dim", "vocab_size", "segment_length", "prefix_length", "n_layers",
                     "hidden", "heads", "n_points", "point_width", "ff_mult", "steps"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 1:
                raise ConfigError(f"model.{name}", f"must be a positive integer, got {value!r}")
        if self.hidden % self.heads:
            raise ConfigError("model.heads", f"hidden width {self.hidden} is not divisible by {self.heads} heads")
        if self.hidden % 2:
            raise ConfigError("model.hidden", "must be even for the timestep embedding")

    @property
    def window(self) -> int:
        """Frames seen by self-attention: prefix plus noisy segment"""
        return self.prefix_length + self.segment_length

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any], prefix: str = "model") -> "DenoiserConfig":
        known = {f.name for f in fields(cls)}
        for key in data:
            if key not in known:
                raise ConfigError(f"{prefix}.{key}", "unknown key")
        return cls(**data)

    @classmethod
    def full_scale(cls, feature_dim: int, vocab_size: int, **overrides: Any) -> "DenoiserConfig":
        """8 layers, width 512, 512 points of width 512"""
        base = dict(n_layers=8, hidden=512, heads=8, n_points=512, point_width=512)
        return cls(feature_dim=feature_dim, vocab_size=vocab_size, **{**base, **overrides})

    @classmethod
    def tiny(cls, feature_dim: int, vocab_size: int, **overrides: Any) -> "DenoiserConfig":
        base = dict(segment_length=8, prefix_length=2, n_layers=1, hidden=32, heads=2,
                    n_points=16, point_width=16, steps=4)
        return cls(feature_dim=feature_dim, vocab_size=vocab_size, **{**base, **overrides})


@dataclass
class ConditionSet:
    """
    Conditioning of one segment

    t is the diffusion time as a fraction of the schedule length (t/T), so
    a model trained with one T can be sampled with another.
    """
    points: np.ndarray  # (V, 3) rest-frame object surface samples
    prompt_id: int
    root: RootTransform
    t: float = 0.0
    meta: Dict[str, Any] = field(default_factory=dict)

    def at(self, t: float) -> "ConditionSet":
        return replace(self, t=float(t))

    def with_root(self, root: RootTransform) -> "ConditionSet":
        return replace(self, root=root)

    @classmethod
    def from_mesh(
        cls,
        mesh: TriMesh,
        n_points: int,
        prompt_id: int,
        root: RootTransform,
        seed: int = 0,
    ) -> "ConditionSet":
        """Area-uniform surface samples drawn with a fixed seed"""
        return cls(points=sample_surface(mesh, n_points, seed=seed), prompt_id=int(prompt_id), root=root)

"""
Data models for optimization runs
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional

import numpy as np

from ..config import DefaultsConfig
from ..datasynth import Shape
from ..dno import DnoConfig, IterateRecord
from ..exceptions import ConfigError
from ..losses import GoalSpec, LossWeights
from ..representation import RootTransform


class Mode(str, Enum):
    """How a run turns noise into a sequence"""
    TWO_PHASE = "two-phase"
    SINGLE_PHASE = "single-phase"
    INFERENCE_ONLY = "inference-only"
    CLASSIFIER_GUIDANCE = "classifier-guidance"
    NN_CONTACTS = "nn-contacts"
    PHASE1_INFERENCE_PHASE2_DNO = "phase1-inference-phase2-dno"


MODES = tuple(m.value for m in Mode)

_SPEC_KEYS = {
    "prompt", "shape", "object_mesh", "table_height", "goals", "mode", "seed", "n_segments",
    "phase1", "phase2", "single", "weights", "reuse_phase1_noise", "freeze_contacts",
    "guidance_scale", "guidance_steps", "evaluate",
}


@dataclass
class RunSpec:
    """
    One optimization run

    prompt must be in the checkpoint's vocabulary. The object is the
    primitive named by shape unless object_mesh points to an OBJ file.
    Goal keyframes index into the generated frames (prefix excluded).
    single configures the single-phase optimizer and falls back to phase2
    when unset.
    """
    prompt: str
    shape: str = "box"
    object_mesh: Optional[str] = None
    table_height: float = DefaultsConfig.TABLE_HEIGHT
    goals: Optional[GoalSpec] = None
    mode: Mode = Mode.TWO_PHASE
    seed: int = 0
    n_segments: int = 1
    phase1: DnoConfig = field(default_factory=DnoConfig.grab)
    phase2: DnoConfig = field(default_factory=DnoConfig.grab)
    single: Optional[DnoConfig] = None
    weights: LossWeights = field(default_factory=LossWeights.grab)
    reuse_phase1_noise: bool = False
    freeze_contacts: bool = False
    guidance_scale: float = 1.0
    guidance_steps: int = DefaultsConfig.GUIDANCE_STEPS
    evaluate: bool = True

    def __post_init__(self):
        try:
            self.mode = Mode(self.mode)
        except ValueError:
            raise ConfigError("spec.mode", f"unknown mode '{self.mode}', expected one of {list(MODES)}")
        self.validate()

    def validate(self) -> None:
        if not self.prompt:
            raise ConfigError("spec.prompt", "must be a non-empty string")
        if self.object_mesh is None and self.shape not in {s.value for s in Shape}:
            raise ConfigError("spec.shape", f"unknown shape '{self.shape}'")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError("spec.seed", f"must be a non-negative integer, got {self.seed!r}")
        if not isinstance(self.n_segments, int) or self.n_segments < 1:
            raise ConfigError("spec.n_segments", f"must be a positive integer, got {self.n_segments!r}")
        if self.table_height <= 0:
            raise ConfigError("spec.table_height", f"must be positive, got {self.table_height!r}")
        if self.mode is Mode.CLASSIFIER_GUIDANCE:
            if self.guidance_scale < 0:
                raise ConfigError("spec.guidance_scale", f"must be >= 0, got {self.guidance_scale!r}")
            if not isinstance(self.guidance_steps, int) or self.guidance_steps < 1:
                raise ConfigError("spec.guidance_steps", f"must be a positive integer, got {self.guidance_steps!r}")
        self.phase1.validate("spec.phase1")
        self.phase2.validate("spec.phase2")
        if self.single is not None:
            self.single.validate("spec.single")

    @property
    def single_phase(self) -> DnoConfig:
        return self.single if self.single is not None else self.phase2

    @property
    def uses_phase1(self) -> bool:
        return self.mode in (Mode.TWO_PHASE, Mode.NN_CONTACTS)

    def to_dict(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {
            "prompt": self.prompt,
            "shape": self.shape,
            "object_mesh": self.object_mesh,
            "table_height": self.table_height,
            "goals": self.goals.to_dict() if self.goals is not None else None,
            "mode": self.mode.value,
            "seed": self.seed,
            "n_segments": self.n_segments,
            "phase1": self.phase1.to_dict(),
            "phase2": self.phase2.to_dict(),
            "weights": self.weights.to_dict(),
            "reuse_phase1_noise": self.reuse_phase1_noise,
            "freeze_contacts": self.freeze_contacts,
            "guidance_scale": self.guidance_scale,
            "guidance_steps": self.guidance_steps,
            "evaluate": self.evaluate,
        }
        if self.single is not None:
            out["single"] = self.single.to_dict()
        return out

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunSpec":
        for key in data:
            if key not in _SPEC_KEYS:
                raise ConfigError(f"spec.{key}", "unknown key")
        kwargs = dict(data)
        if kwargs.get("goals") is not None:
            kwargs["goals"] = GoalSpec.from_dict(kwargs["goals"])
        for name in ("phase1", "phase2", "single"):
            if kwargs.get(name) is not None:
                kwargs[name] = DnoConfig.from_dict(kwargs[name], prefix=f"spec.{name}")
        if "weights" in kwargs:
            kwargs["weights"] = LossWeights.from_dict(kwargs["weights"], prefix="spec.weights")
        return cls(**kwargs)


@dataclass
class FrozenChannels:
    """
    Contact and object channels fixed after phase 1

    features holds the denormalized generated frames with binary contact
    bits; normalized is the same rows in model space. Only the columns in
    mask are frozen.
    """
    features: np.ndarray  # (G, D)
    normalized: np.ndarray  # (G, D)
    mask: np.ndarray  # (D,) bool


@dataclass
class RunResult:
    """
    Outcome of one run

    features is the denormalized stitched sequence, prefix included, posed
    from root; generated starts at prefix_frames.
    """
    spec: RunSpec
    features: np.ndarray
    root: RootTransform
    prefix_frames: int
    phase1: List[IterateRecord] = field(default_factory=list)
    phase2: List[IterateRecord] = field(default_factory=list)
    metrics: Dict[str, Any] = field(default_factory=dict)
    frozen: Optional[FrozenChannels] = None
    config_hash: str = ""

    @property
    def generated(self) -> np.ndarray:
        return self.features[self.prefix_frames:]

"""
Data models for the objective terms
"""

from dataclasses import asdict, dataclass, field, fields
from typing import Any, Dict, List, Optional

import numpy as np

from ..exceptions import ConfigError
from ..geometry import TriMesh, require_watertight


@dataclass
class LossWeights:
    """Term weights; defaults are the GRAB column"""
    contact: float = 0.95
    foot: float = 0.5
    jitter: float = 1e-5
    pen_human_object: float = 0.05
    pen_human_scene: float = 0.2
    pen_human_human: float = 0.05
    pen_object_scene: float = 1.2
    goal: float = 0.5
    static: float = 0.9
    feet_floor_contact: float = 0.0

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        for f in fields(self):
            value = getattr(self, f.name)
            if not isinstance(value, (int, float)) or value < 0:
                raise ConfigError(f"weights.{f.name}", f"must be a non-negative number, got {value!r}")

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any], prefix: str = "weights") -> "LossWeights":
        known = {f.name for f in fields(cls)}
        for key in data:
            if key not in known:
                raise ConfigError(f"{prefix}.{key}", "unknown key")
        return cls(**data)

    def scaled(self, **overrides: float) -> "LossWeights":
        return LossWeights(**{**self.to_dict(), **overrides})

    @classmethod
    def grab(cls) -> "LossWeights":
        return cls()

    @classmethod
    def omomo(cls) -> "LossWeights":
        return cls(
            contact=0.95,
            foot=0.5,
            jitter=1e-3,
            pen_human_object=0.05,
            pen_human_scene=0.0,
            pen_human_human=0.05,
            pen_object_scene=0.05,
            goal=0.9,
            static=0.05,
            feet_floor_contact=0.5,
        )

    @classmethod
    def high_penetration(cls) -> "LossWeights":
        return cls(pen_human_object=0.9)


@dataclass
class GoalSpec:
    """Object keyframes: frame index -> target translation and rotation"""
    frames: List[int] = field(default_factory=list)
    translations: Optional[np.ndarray] = None  # (K, 3)
    rotations: Optional[np.ndarray] = None  # (K, 3, 3)

    def __post_init__(self):
        k = len(self.frames)
        if self.translations is None:
            self.translations = np.zeros((k, 3))
        if self.rotations is None:
            self.rotations = np.broadcast_to(np.eye(3), (k, 3, 3)).copy()
        self.translations = np.asarray(self.translations, dtype=np.float64).reshape(k, 3)
        self.rotations = np.asarray(self.rotations, dtype=np.float64).reshape(k, 3, 3)

    def __len__(self) -> int:
        return len(self.frames)

    def check(self, length: int) -> None:
        bad = [f for f in self.frames if not 0 <= f < length]
        if bad:
            raise ValueError(f"goal keyframes {bad} outside a sequence of {length} frames")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "frames": list(self.frames),
            "translations": self.translations.tolist(),
            "rotations": self.rotations.tolist(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "GoalSpec":
        return cls(frames=list(data["frames"]), translations=np.array(data["translations"]), rotations=np.array(data["rotations"]))


@dataclass(eq=False)
class Scene:
    """
    Static scene geometry

    `table` is the support surface; `floor` is a slab whose top is at
    floor_height. Human-scene penetration uses only the table.
    """
    table: TriMesh
    floor: TriMesh
    floor_height: float = 0.0
    table_height: float = 0.85

    def __post_init__(self):
        require_watertight(self.table)
        require_watertight(self.floor)

    @property
    def human_meshes(self) -> List[TriMesh]:
        return [self.table]

    @property
    def object_meshes(self) -> List[TriMesh]:
        return [self.table, self.floor]


@dataclass
class LossBreakdown:
    """Raw term values, their weights and the weighted total"""
    terms: Dict[str, float] = field(default_factory=dict)
    weights: Dict[str, float] = field(default_factory=dict)
    total: float = 0.0

    def weighted(self) -> Dict[str, float]:
        return {k: self.weights.get(k, 1.0) * v for k, v in self.terms.items()}

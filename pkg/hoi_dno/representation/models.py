"""
Data models for the feature representation
"""

from dataclasses import dataclass, field
from typing import Any, Dict, Optional

import numpy as np

from ..exceptions import EncodingError
from ..rig.rotations import cont6d_to_rotmat_np


@dataclass
class ContactFrame:
    """Per-anchor contact bits (..., A) and rest-frame contact points (..., A, 3)"""
    bits: np.ndarray
    points: np.ndarray

    def __post_init__(self):
        self.bits = np.asarray(self.bits, dtype=np.float64)
        self.points = np.asarray(self.points, dtype=np.float64)
        if self.points.shape != self.bits.shape + (3,):
            raise EncodingError(f"contact points {self.points.shape} do not match bits {self.bits.shape}")

    @property
    def n_anchors(self) -> int:
        return self.bits.shape[-1]


@dataclass
class HumanTrack:
    """
    World-space human motion

    rotations[:, 0] is the global root rotation, rotations[:, 1:] are local
    joint rotations; root_translation places the root joint.
    """
    root_translation: np.ndarray  # (N, 3)
    rotations: np.ndarray  # (N, J, 3, 3)

    def __len__(self) -> int:
        return len(self.root_translation)


@dataclass
class ObjectTrack:
    """World-space object pose per frame"""
    rotations: np.ndarray  # (N, 3, 3)
    translations: np.ndarray  # (N, 3)

    def __len__(self) -> int:
        return len(self.translations)


@dataclass
class WorldTracks:
    """Time-aligned human, object and contact tracks"""
    human: HumanTrack
    obj: ObjectTrack
    contacts: ContactFrame
    fps: int = 30

    def __post_init__(self):
        n = len(self.human)
        if len(self.obj) != n or self.contacts.bits.shape[0] != n:
            raise EncodingError(
                f"track lengths differ: human {n}, object {len(self.obj)}, contacts {self.contacts.bits.shape[0]}"
            )

    def __len__(self) -> int:
        return len(self.human)


@dataclass
class RootTransform:
    """Root rigid transform; as a vector it is cont6d(rotation) followed by translation"""
    rotation: np.ndarray
    translation: np.ndarray

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.rotation[:, 0], self.rotation[:, 1], self.translation])

    @classmethod
    def from_vector(cls, vector: np.ndarray) -> "RootTransform":
        vector = np.asarray(vector, dtype=np.float64)
        return cls(rotation=cont6d_to_rotmat_np(vector[:6]), translation=vector[6:9].copy())

    @classmethod
    def identity(cls, translation=(0.0, 0.0, 0.0)) -> "RootTransform":
        return cls(rotation=np.eye(3), translation=np.asarray(translation, dtype=np.float64))


@dataclass
class Segment:
    """
    L frames of features with the root transform of the first frame

    overlap counts leading frames shared with the previous segment.
    """
    features: np.ndarray  # (L, D)
    root: RootTransform
    overlap: int = 0
    meta: Dict[str, Any] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.features)


@dataclass
class SequenceFile:
    """Contents of a .seq file"""
    features: np.ndarray
    root: RootTransform
    header: Dict[str, Any]
    extra: Optional[Dict[str, np.ndarray]] = None

"""
Per-channel feature normalization

Statistics are fitted on the training corpus and stored in checkpoints. The
std is floored so constant channels (e.g. static objects) do not blow up.
"""

from dataclasses import dataclass
from typing import Dict, Iterable, Union

import numpy as np

from ..config import DefaultsConfig
from ..exceptions import EncodingError
from ..numerics import Tensor

ArrayLike = Union[np.ndarray, Tensor]


@dataclass
class FeatureNormalizer:
    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, sequences: Iterable[np.ndarray], std_floor: float = DefaultsConfig.NORMALIZER_STD_FLOOR) -> "FeatureNormalizer":
        stacked = np.concatenate([np.asarray(s, dtype=np.float64).reshape(-1, np.shape(s)[-1]) for s in sequences])
        if not len(stacked):
            raise EncodingError("cannot fit a normalizer on an empty corpus")
        return cls(mean=stacked.mean(axis=0), std=np.maximum(stacked.std(axis=0), std_floor))

    @classmethod
    def identity(cls, dim: int) -> "FeatureNormalizer":
        return cls(mean=np.zeros(dim), std=np.ones(dim))

    @property
    def dim(self) -> int:
        return len(self.mean)

    def normalize(self, x: ArrayLike) -> ArrayLike:
        if isinstance(x, Tensor):
            return (x - Tensor._wrap(self.mean)) / Tensor._wrap(self.std)
        return (np.asarray(x) - self.mean) / self.std

    def denormalize(self, x: ArrayLike) -> ArrayLike:
        if isinstance(x, Tensor):
            return x * Tensor._wrap(self.std) + Tensor._wrap(self.mean)
        return np.asarray(x) * self.std + self.mean

    def to_tensors(self, prefix: str = "normalizer") -> Dict[str, np.ndarray]:
        return {f"{prefix}.mean": self.mean, f"{prefix}.std": self.std}

    @classmethod
    def from_tensors(cls, tensors: Dict[str, np.ndarray], prefix: str = "normalizer") -> "FeatureNormalizer":
        try:
            return cls(mean=tensors[f"{prefix}.mean"], std=tensors[f"{prefix}.std"])
        except KeyError as e:
            raise EncodingError(f"normalizer statistics missing: {e}")

"""
Data models for evaluation metrics
"""

from dataclasses import asdict, dataclass
from typing import Any, Dict, Optional


@dataclass
class GraspMetrics:
    """Grasp failure measures in millimetres and the frame counts behind them"""
    penetration_mm: float
    floating_mm: float
    penetration_frames: int
    floating_frames: int

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class ChoisMetrics:
    """
    Condition-matching and interaction measures

    Distances and heights are in millimetres, contact rates are fractions
    except contact_percent. T_* are None without goal keyframes.
    """
    T_s: Optional[float]
    T_e: Optional[float]
    T_xy: Optional[float]
    H_feet: float
    FS: float
    C_prec: float
    C_rec: float
    C_F1: float
    contact_percent: float
    P_hand: float

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class RealismMetrics:
    """Embedding-space measures of a generated set against the reference set"""
    fid: float
    diversity: float
    multimodality: float
    ira: float
    r_prec: float
    ave: float

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

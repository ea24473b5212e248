"""
Condition-matching and interaction metrics

Goal errors, foot height and skating, hand contact agreement and hand
penetration of one generated sequence.
"""

import logging
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np

from ..config import DefaultsConfig
from ..geometry import SdfGrid, TriMesh, object_sdf
from ..losses import GoalSpec
from ..representation import RootTransform, threshold_bits
from ..rig import RigDef
from .grasp import MM, PosedSequence, anchor_distances, hand_signed_distances, pose_sequence
from .models import ChoisMetrics

logger = logging.getLogger(__name__)


def goal_errors(translations: np.ndarray, goals: Optional[GoalSpec]) -> Tuple[Optional[float], Optional[float], Optional[float]]:
    """
    (T_s, T_e, T_xy) in millimetres

    T_s and T_e are the object position errors at the first and last
    keyframes; T_xy is the planar error at the last keyframe.
    """
    if goals is None or len(goals) == 0:
        return None, None, None
    goals.check(len(translations))
    order = np.argsort(goals.frames)
    first, last = order[0], order[-1]
    start = translations[goals.frames[first]] - goals.translations[first]
    end = translations[goals.frames[last]] - goals.translations[last]
    return float(np.linalg.norm(start)) * MM, float(np.linalg.norm(end)) * MM, float(np.linalg.norm(end[:2])) * MM


def feet_metrics(posed: PosedSequence, rig: RigDef, floor_height: float = DefaultsConfig.FLOOR_HEIGHT) -> Tuple[float, float]:
    """
    (H_feet, FS) in millimetres

    H_feet is the mean over frames of the lower toe height above the floor.
    FS weights each toe's planar step by clip(2 - 2^(h / 0.033), 0, 1) with h
    the toe height at the step start, then averages over steps and toes.
    """
    toes = posed.positions[:, list(rig.toe_joints)]  # (F, 2, 3)
    heights = toes[..., 2] - floor_height
    h_feet = float(heights.min(axis=1).mean()) * MM
    if len(toes) < 2:
        return h_feet, 0.0
    steps = np.linalg.norm(np.diff(toes[..., :2], axis=0), axis=-1)
    weights = np.clip(2.0 - np.power(2.0, heights[:-1] / DefaultsConfig.FS_HEIGHT_SCALE), 0.0, 1.0)
    return h_feet, float((weights * steps).mean()) * MM


def hand_contacts(bits_or_distances: np.ndarray, rig: RigDef, from_distances: bool) -> np.ndarray:
    """
    (F, 2) per-hand contact flags, left then right

    From distances a hand is in contact when any of its anchors is closer
    than the detection distance; from bits when any anchor bit is set.
    """
    values = np.asarray(bits_or_distances)
    if from_distances:
        flags = values < DefaultsConfig.CONTACT_DETECT_DISTANCE
    else:
        flags = threshold_bits(values) > 0
    n_left = len(rig.left_anchors)
    return np.stack([flags[:, :n_left].any(axis=1), flags[:, n_left:].any(axis=1)], axis=1)


def contact_scores(predicted: np.ndarray, reference: np.ndarray) -> Tuple[float, float, float]:
    """
    Precision, recall and F1 of boolean contact arrays

    An empty denominator scores 1 when the other side is empty too and 0
    otherwise.
    """
    predicted = np.asarray(predicted, dtype=bool)
    reference = np.asarray(reference, dtype=bool)
    tp = float(np.sum(predicted & reference))
    n_pred = float(predicted.sum())
    n_ref = float(reference.sum())
    precision = tp / n_pred if n_pred else float(n_ref == 0)
    recall = tp / n_ref if n_ref else float(n_pred == 0)
    f1 = 2.0 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def hand_penetration(posed: PosedSequence, rig: RigDef, sdf: SdfGrid) -> float:
    """Mean |min(d, 0)| over every hand vertex of every frame, in millimetres, with d from the object SDF"""
    values = [np.abs(np.minimum(hand_signed_distances(posed, rig, sdf, f), 0.0)) for f in range(len(posed))]
    return float(np.concatenate(values).mean()) * MM if values else 0.0


def chois_suite(
    features: np.ndarray,
    root: RootTransform,
    rig: RigDef,
    mesh: TriMesh,
    goals: Optional[GoalSpec] = None,
    reference_bits: Optional[np.ndarray] = None,
    floor_height: float = DefaultsConfig.FLOOR_HEIGHT,
    sdf: Optional[SdfGrid] = None,
    sdf_cache: Optional[Union[str, Path]] = None,
) -> ChoisMetrics:
    """
    Condition and interaction metrics of one sequence

    Args:
        features: (F, D) denormalized features
        root: Root transform of the first frame
        rig: Rig of the features
        mesh: Object mesh in its rest frame
        goals: Object keyframes, indexed into features
        reference_bits: (F, A) reference contact bits; the sequence's own
            contact channels when omitted
        floor_height: Floor height for H_feet and FS
        sdf: Object SDF for P_hand; baked from mesh when omitted
        sdf_cache: Directory where the baked SDF is cached
    """
    posed = pose_sequence(features, root, rig)
    t_s, t_e, t_xy = goal_errors(posed.tracks.obj.translations, goals)
    h_feet, fs = feet_metrics(posed, rig, floor_height)

    detected = hand_contacts(anchor_distances(posed, rig, mesh), rig, from_distances=True)
    reference = posed.tracks.contacts.bits if reference_bits is None else np.asarray(reference_bits)
    if reference.shape != posed.tracks.contacts.bits.shape:
        raise ValueError(f"reference bits {reference.shape} do not match {posed.tracks.contacts.bits.shape}")
    expected = hand_contacts(reference, rig, from_distances=False)
    precision, recall, f1 = contact_scores(detected, expected)
    if sdf is None:
        sdf = object_sdf(mesh, cache_dir=sdf_cache)

    return ChoisMetrics(
        T_s=t_s,
        T_e=t_e,
        T_xy=t_xy,
        H_feet=h_feet,
        FS=fs,
        C_prec=precision,
        C_rec=recall,
        C_F1=f1,
        contact_percent=100.0 * float(detected.any(axis=1).mean()),
        P_hand=hand_penetration(posed, rig, sdf),
    )

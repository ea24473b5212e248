"""
Evaluation metrics: realism, grasp failures and condition matching
"""

from .aggregate import MetricSummary, aggregate_runs, export_table, flatten_metrics, load_run_metrics, summary_table
from .chois import chois_suite, contact_scores, feet_metrics, goal_errors, hand_contacts, hand_penetration
from .classifier import EmbedClassifier, ira, r_prec, realism_suite, sequence_features
from .grasp import (
    PosedSequence,
    above_table,
    anchor_distances,
    frame_contact_geometry,
    hand_signed_distances,
    penetration_floating,
    pose_sequence,
)
from .models import ChoisMetrics, GraspMetrics, RealismMetrics
from .realism import ave, diversity, fid, frechet_distance, multimodality

__all__ = [
    "ChoisMetrics",
    "EmbedClassifier",
    "GraspMetrics",
    "MetricSummary",
    "PosedSequence",
    "RealismMetrics",
    "above_table",
    "aggregate_runs",
    "anchor_distances",
    "ave",
    "chois_suite",
    "contact_scores",
    "diversity",
    "export_table",
    "feet_metrics",
    "fid",
    "flatten_metrics",
    "frame_contact_geometry",
    "frechet_distance",
    "goal_errors",
    "hand_contacts",
    "hand_penetration",
    "hand_signed_distances",
    "ira",
    "load_run_metrics",
    "multimodality",
    "penetration_floating",
    "pose_sequence",
    "r_prec",
    "realism_suite",
    "sequence_features",
    "summary_table",
]

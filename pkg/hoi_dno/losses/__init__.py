"""
Objective terms of both optimization phases
"""

from .models import GoalSpec, LossBreakdown, LossWeights, Scene
from .state import DecodedState, decode_state
from .terms import (
    loss_contact,
    loss_feet_floor_contact,
    loss_foot,
    loss_goal,
    loss_human,
    loss_human_penetration,
    loss_jitter,
    loss_object,
    loss_object_scene,
    loss_static,
    non_contact_intervals,
)

__all__ = [
    "DecodedState",
    "GoalSpec",
    "LossBreakdown",
    "LossWeights",
    "Scene",
    "decode_state",
    "loss_contact",
    "loss_feet_floor_contact",
    "loss_foot",
    "loss_goal",
    "loss_human",
    "loss_human_penetration",
    "loss_jitter",
    "loss_object",
    "loss_object_scene",
    "loss_static",
    "non_contact_intervals",
]

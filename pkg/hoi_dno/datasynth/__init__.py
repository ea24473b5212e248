"""
Scripted human-object interaction episodes and corpora
"""

from .dataset import assign_splits, load_corpus, make_dataset, prompt_vocabulary, read_labels, scenario_for
from .episode import episode_goals, grasp_offsets, idle_prefix, object_trajectory, synth_episode
from .ik import ArmSolver
from .models import (
    SHAPES,
    VERBS,
    Corpus,
    CorpusEntry,
    CorpusRecord,
    Episode,
    PhaseBounds,
    ScenarioSpec,
    Shape,
    Verb,
)
from .scene import build_scene, object_mesh, rest_position

__all__ = [
    "SHAPES",
    "VERBS",
    "ArmSolver",
    "Corpus",
    "CorpusEntry",
    "CorpusRecord",
    "Episode",
    "PhaseBounds",
    "ScenarioSpec",
    "Shape",
    "Verb",
    "assign_splits",
    "build_scene",
    "episode_goals",
    "grasp_offsets",
    "idle_prefix",
    "load_corpus",
    "make_dataset",
    "object_mesh",
    "object_trajectory",
    "prompt_vocabulary",
    "read_labels",
    "rest_position",
    "scenario_for",
    "synth_episode",
]

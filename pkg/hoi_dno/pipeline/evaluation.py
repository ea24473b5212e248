"""
Evaluation of runs, run directories and ground-truth corpora
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..config import DefaultsConfig
from ..datasynth import VERBS, Corpus, Shape, build_scene, object_mesh
from ..diffusion import Checkpoint
from ..exceptions import ArtifactError, MetricError
from ..geometry import TriMesh, load_obj
from ..losses import GoalSpec
from ..metrics import EmbedClassifier, RealismMetrics, chois_suite, penetration_floating, realism_suite, sequence_features
from ..representation import RootTransform, SequenceFile, joints_from_features
from ..rig import RigDef
from .artifacts import METRICS_FILE, read_run, run_hash, write_metrics
from .context import default_goals, root_after
from .models import RunSpec

logger = logging.getLogger(__name__)

GROUND_TRUTH = "ground-truth"

Labeled = Tuple[np.ndarray, RootTransform, str]


def evaluate_run(
    features: np.ndarray,
    root: RootTransform,
    rig: RigDef,
    mesh: TriMesh,
    goals: Optional[GoalSpec],
    table_height: float,
    floor_height: float,
    seed: int = 0,
    sdf_cache: Optional[Union[str, Path]] = None,
) -> Dict[str, Any]:
    """Grasp and condition metrics of the generated frames; the object SDF is cached in sdf_cache when given"""
    grasp = penetration_floating(features, root, rig, mesh, table_height, seed=seed)
    chois = chois_suite(features, root, rig, mesh, goals, floor_height=floor_height, sdf_cache=sdf_cache)
    return {"grasp": grasp.to_dict(), "chois": chois.to_dict()}


def run_generated(sequence: SequenceFile, rig: RigDef) -> Tuple[np.ndarray, RootTransform]:
    """Generated rows of a stored run and the root transform of their first frame"""
    p = int(sequence.header.get("meta", {}).get("prefix_frames", 0))
    if p == 0:
        return sequence.features, sequence.root
    return sequence.features[p:], root_after(sequence.features[:p], sequence.root, rig)


def spec_mesh(spec: RunSpec) -> TriMesh:
    return load_obj(spec.object_mesh) if spec.object_mesh else object_mesh(Shape(spec.shape))


def evaluate_run_dir(run_dir: Union[str, Path], rig: RigDef, checkpoint: Optional[Checkpoint] = None) -> Dict[str, Any]:
    """
    Recompute and rewrite metrics.json of a run directory

    Values already in metrics.json that evaluation does not produce (phase
    objectives, flip counts) are kept.

    Args:
        run_dir: Run directory written by write_run
        rig: Rig the run was posed on
        checkpoint: When given, the run must have been produced by it

    Raises:
        ArtifactError: Artifacts disagree, or the run comes from another rig,
            model or config
    """
    spec, sequence, config_hash = read_run(run_dir, rig)
    if checkpoint is not None:
        checkpoint.check_rig(rig)
        if run_hash(spec, checkpoint.config_hash) != config_hash:
            raise ArtifactError(f"{run_dir}: run was not produced by this checkpoint and spec")
    features, root = run_generated(sequence, rig)
    p = int(sequence.header.get("meta", {}).get("prefix_frames", 0))
    goals = spec.goals if spec.goals is not None else default_goals(spec, rig, p, len(features))
    scene = build_scene(spec.table_height)

    path = Path(run_dir) / METRICS_FILE
    payload: Dict[str, Any] = {"mode": spec.mode.value, "seed": spec.seed, "prompt": spec.prompt}
    if path.exists():
        payload.update({k: v for k, v in json.loads(path.read_text(encoding="utf-8")).items() if k != "config_hash"})
    payload.update(
        evaluate_run(
            features, root, rig, spec_mesh(spec), goals, spec.table_height, scene.floor_height,
            seed=spec.seed, sdf_cache=run_dir,
        )
    )
    write_metrics(payload, run_dir, config_hash)
    return payload


def _mean_groups(rows: Sequence[Dict[str, Dict[str, Any]]]) -> Dict[str, Dict[str, float]]:
    """Per-group mean of every numeric leaf, ignoring None"""
    out: Dict[str, Dict[str, float]] = {}
    for group in rows[0]:
        keys = rows[0][group].keys()
        out[group] = {}
        for key in keys:
            values = [r[group][key] for r in rows if r[group][key] is not None]
            if values:
                out[group][key] = float(np.mean(values))
    return out


def evaluate_corpus(corpus: Corpus, rig: RigDef, seed: int = 0) -> Dict[str, Any]:
    """
    Mean grasp and interaction metrics of a ground-truth corpus

    Episodes are scored over all their frames, without goal keyframes.

    Raises:
        MetricError: Empty corpus
    """
    if not len(corpus):
        raise MetricError("cannot evaluate an empty corpus")
    rows: List[Dict[str, Dict[str, Any]]] = []
    for entry in corpus.entries:
        table_height = float(entry.meta.get("table_height", DefaultsConfig.TABLE_HEIGHT))
        floor = build_scene(table_height).floor_height
        rows.append(evaluate_run(entry.features, entry.root, rig, entry.object_mesh, None, table_height, floor, seed=seed))
    payload: Dict[str, Any] = {"mode": GROUND_TRUTH, "seed": seed, "episodes": len(rows)}
    payload.update(_mean_groups(rows))
    logger.info("evaluated %d ground-truth episodes", len(rows))
    return payload


def verb_of(prompt: str) -> str:
    return prompt.split()[0] if prompt else ""


def train_classifier(corpus: Corpus, rig: RigDef, steps: int = 300, seed: int = 0, verbose: bool = False) -> EmbedClassifier:
    """Verb classifier fitted to a corpus"""
    inputs = [sequence_features(e.features, e.root, rig) for e in corpus.entries]
    if not inputs:
        raise MetricError("cannot train a classifier on an empty corpus")
    classifier = EmbedClassifier([v.value for v in VERBS], inputs[0].shape[1], seed=seed)
    classifier.fit(inputs, [e.verb for e in corpus.entries], steps=steps, seed=seed, verbose=verbose)
    return classifier


def load_run_sequences(run_dirs: Sequence[Union[str, Path]], rig: RigDef) -> List[Labeled]:
    """(generated features, root, verb) of every run"""
    out = []
    for run_dir in run_dirs:
        spec, sequence, _ = read_run(run_dir, rig)
        features, root = run_generated(sequence, rig)
        out.append((features, root, verb_of(spec.prompt)))
    return out


def evaluate_realism(
    classifier: EmbedClassifier,
    reference: Corpus,
    generated: Sequence[Labeled],
    rig: RigDef,
    seed: int = 0,
) -> RealismMetrics:
    """Embedding metrics of generated sequences against a reference corpus"""
    return realism_suite(
        classifier,
        [sequence_features(e.features, e.root, rig) for e in reference.entries],
        [e.verb for e in reference.entries],
        [sequence_features(f, r, rig) for f, r, _ in generated],
        [label for _, _, label in generated],
        [joints_from_features(e.features, e.root, rig) for e in reference.entries],
        [joints_from_features(f, r, rig) for f, r, _ in generated],
        seed=seed,
    )

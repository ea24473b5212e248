"""
Corpus writer and loader

Layout of a corpus directory:

    episodes/<name>.seq   encoded episode (features + first-frame root)
    objects/<shape>.obj   rest-pose object meshes
    labels.csv            file,prompt,verb,shape,seed,split
    vocab.txt             one prompt per line; line index = prompt id

Episode i uses verb i % 3 and shape (i // 3) % 3, so verb counts are balanced
to within one. Output is byte-identical for equal arguments.
"""

import csv
import logging
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Dict, List, Optional, Union

import numpy as np
from tqdm import tqdm

from ..exceptions import ArtifactError
from ..geometry import TriMesh, load_obj, save_obj
from ..representation import RootTransform, encode_features, load_sequence, save_sequence
from ..rig import RigDef, build_rig
from .episode import synth_episode
from .models import SHAPES, VERBS, Corpus, CorpusEntry, CorpusRecord, Episode, ScenarioSpec
from .scene import object_mesh

logger = logging.getLogger(__name__)

LABEL_COLUMNS = ["file", "prompt", "verb", "shape", "seed", "split"]


def prompt_vocabulary() -> List[str]:
    """Closed vocabulary: every verb paired with every shape"""
    return [f"{verb.value} {shape.value}" for verb in VERBS for shape in SHAPES]


def episode_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def scenario_for(index: int, seed: int, **overrides) -> ScenarioSpec:
    return ScenarioSpec(
        verb=VERBS[index % len(VERBS)],
        shape=SHAPES[(index // len(VERBS)) % len(SHAPES)],
        seed=episode_seed(seed, index),
        **overrides,
    )


def assign_splits(n: int, seed: int, split: str = "train", holdout: float = 0.0) -> List[str]:
    """Every episode gets `split`, except a seeded holdout fraction labeled 'test'"""
    if not 0.0 <= holdout < 1.0:
        raise ValueError(f"holdout must be in [0, 1), got {holdout}")
    splits = [split] * n
    k = int(round(n * holdout))
    if k:
        for i in np.random.default_rng(seed).permutation(n)[:k]:
            splits[int(i)] = "test"
    return splits


def _synth(args) -> Episode:
    spec, rig = args
    return synth_episode(spec, rig)


def make_dataset(
    out_dir: Union[str, Path],
    n: int,
    seed: int = 0,
    split: str = "train",
    holdout: float = 0.0,
    rig: Optional[RigDef] = None,
    workers: int = 1,
    verbose: bool = False,
    **scenario_overrides,
) -> Corpus:
    """
    Synthesize and write a corpus

    Args:
        out_dir: Corpus directory (created)
        n: Number of episodes (0 writes an empty corpus)
        seed: Corpus seed; episode seeds derive from it
        split: Split label of the episodes
        holdout: Fraction relabeled 'test'
        rig: Rig to pose (toy rig when omitted)
        workers: Worker processes for synthesis
        verbose: Show a progress bar
        **scenario_overrides: Extra ScenarioSpec fields (timing, table height)

    Returns:
        The corpus as written
    """
    rig = rig or build_rig("toy")
    root = Path(out_dir)
    (root / "episodes").mkdir(parents=True, exist_ok=True)
    (root / "objects").mkdir(parents=True, exist_ok=True)

    vocab = prompt_vocabulary()
    (root / "vocab.txt").write_text("\n".join(vocab) + "\n", encoding="utf-8")
    object_paths: Dict[str, str] = {}
    for shape in SHAPES:
        rel = f"objects/{shape.value}.obj"
        save_obj(root / rel, object_mesh(shape))
        object_paths[shape.value] = rel

    specs = [scenario_for(i, seed, **scenario_overrides) for i in range(n)]
    splits = assign_splits(n, seed, split, holdout)
    jobs = [(spec, rig) for spec in specs]
    if workers > 1 and n > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            episodes = list(tqdm(pool.map(_synth, jobs), total=n, disable=not verbose, desc="episodes"))
    else:
        episodes = [_synth(job) for job in tqdm(jobs, disable=not verbose, desc="episodes")]

    corpus = Corpus(path=str(root), vocab=vocab)
    width = max(4, len(str(max(n - 1, 0))))
    for i, (episode, episode_split) in enumerate(zip(episodes, splits)):
        spec = episode.spec
        rel = f"episodes/{i:0{width}d}.seq"
        features = encode_features(episode.tracks, rig)
        first = RootTransform(
            rotation=episode.tracks.human.rotations[0, 0].copy(),
            translation=episode.tracks.human.root_translation[0].copy(),
        )
        meta = {
            "prompt": spec.prompt,
            "verb": spec.verb.value,
            "shape": spec.shape.value,
            "seed": spec.seed,
            "split": episode_split,
            "table_height": spec.table_height,
            "object_y": spec.object_y,
            "prefix_frames": spec.prefix_frames,
            "phases": {k: list(v) for k, v in episode.phases.to_dict().items()},
            "contact_counts": episode.contact_counts,
        }
        save_sequence(root / rel, features, first, rig, fps=spec.fps, object_mesh=object_paths[spec.shape.value], meta=meta)
        record = CorpusRecord(file=rel, prompt=spec.prompt, verb=spec.verb.value, shape=spec.shape.value, seed=spec.seed, split=episode_split)
        corpus.entries.append(CorpusEntry(record=record, features=features, root=first, object_mesh=episode.object_mesh, meta=meta))

    with open(root / "labels.csv", "w", encoding="utf-8", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=LABEL_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for entry in corpus.entries:
            r = entry.record
            writer.writerow({"file": r.file, "prompt": r.prompt, "verb": r.verb, "shape": r.shape, "seed": r.seed, "split": r.split})

    logger.info("✓ Saved corpus of %d episodes to %s", n, root)
    return corpus


def read_labels(path: Union[str, Path]) -> List[CorpusRecord]:
    """
    Parse labels.csv

    Raises:
        FileNotFoundError: Missing file
        ArtifactError: Missing columns or malformed rows
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Label file not found: {path}")
    records = []
    with open(path, "r", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        missing = set(LABEL_COLUMNS) - set(reader.fieldnames or [])
        if missing:
            raise ArtifactError(f"{path}: missing columns {sorted(missing)}")
        for row_num, row in enumerate(reader, start=2):
            try:
                records.append(
                    CorpusRecord(
                        file=row["file"].strip(),
                        prompt=row["prompt"].strip(),
                        verb=row["verb"].strip(),
                        shape=row["shape"].strip(),
                        seed=int(row["seed"]),
                        split=row["split"].strip(),
                    )
                )
            except (KeyError, ValueError) as e:
                raise ArtifactError(f"{path}:{row_num}: {e}")
    return records


def load_corpus(path: Union[str, Path], rig: Optional[RigDef] = None, split: Optional[str] = None) -> Corpus:
    """
    Load a corpus directory written by make_dataset

    Args:
        path: Corpus directory
        rig: When given, every episode's rig hash must match it
        split: Keep only this split

    Raises:
        FileNotFoundError: Missing directory, label file or vocabulary
        ArtifactError: Malformed files or rig mismatch
    """
    root = Path(path)
    vocab_path = root / "vocab.txt"
    if not vocab_path.exists():
        raise FileNotFoundError(f"Vocabulary not found: {vocab_path}")
    vocab = [line for line in vocab_path.read_text(encoding="utf-8").splitlines() if line]
    corpus = Corpus(path=str(root), vocab=vocab)
    meshes: Dict[str, TriMesh] = {}
    for record in read_labels(root / "labels.csv"):
        if split is not None and record.split != split:
            continue
        seq = load_sequence(root / record.file, rig=rig)
        mesh_rel = seq.header.get("object_mesh")
        if mesh_rel not in meshes:
            meshes[mesh_rel] = load_obj(root / mesh_rel, name=record.shape)
        corpus.entries.append(
            CorpusEntry(record=record, features=seq.features, root=seq.root, object_mesh=meshes[mesh_rel], meta=seq.header.get("meta", {}))
        )
    logger.info("✓ Loaded %d episodes from %s", len(corpus), root)
    return corpus

"""
Training of the segment denoiser

Windows of prefix_length + segment_length frames are cut from corpus
episodes at random offsets. The prefix stays clean; only the segment is
noised, and the loss is the mean squared error between the predicted and
the true clean segment (L_simple).
"""

import logging
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence

import numpy as np
from tqdm import tqdm

from ..datasynth.models import Corpus
from ..exceptions import EncodingError, TrainingDivergedError
from ..numerics import Adam, Tape, Tensor, backward
from ..numerics import functional as F
from ..representation import FeatureNormalizer, RootTransform, decode_features
from ..rig import RigDef
from .denoiser import Denoiser, denoise
from .models import ConditionSet, DenoiserConfig, Schedule
from .sampler import q_sample

logger = logging.getLogger(__name__)


@dataclass
class TrainingExample:
    """One window: clean prefix, clean target segment and its conditioning"""
    prev: np.ndarray  # (P, D) normalized
    target: np.ndarray  # (L, D) normalized
    cond: ConditionSet


@dataclass
class _Episode:
    features: np.ndarray  # normalized
    roots: List[RootTransform]
    points: np.ndarray
    prompt_id: int


def fit_normalizer(corpus: Corpus) -> FeatureNormalizer:
    """Per-channel statistics over every frame of a corpus"""
    return FeatureNormalizer.fit(entry.features for entry in corpus.entries)


def shuffled_labels(corpus: Corpus, seed: int = 0) -> Corpus:
    """
    Control corpus whose prompts are permuted across episodes

    Features and meshes are untouched, so a model trained on it can only
    learn the prompt-motion association by chance.
    """
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(corpus.entries))
    entries = []
    for entry, source in zip(corpus.entries, order):
        donor = corpus.entries[int(source)].record
        record = replace(entry.record, prompt=donor.prompt, verb=donor.verb)
        entries.append(replace(entry, record=record))
    return Corpus(path=corpus.path, vocab=corpus.vocab, entries=entries)


class WindowSampler:
    """
    Draws training windows from a corpus

    Args:
        corpus: Loaded corpus (features are unnormalized)
        rig: Rig the corpus was encoded with (for per-frame roots)
        config: Model shape (window length, point count)
        normalizer: Feature statistics
    """

    def __init__(self, corpus: Corpus, rig: RigDef, config: DenoiserConfig, normalizer: FeatureNormalizer):
        self.config = config
        self.episodes: List[_Episode] = []
        skipped = 0
        for entry in corpus.entries:
            if len(entry.features) < config.window:
                skipped += 1
                continue
            tracks = decode_features(entry.features, entry.root, rig)
            roots = [
                RootTransform(rotation=tracks.human.rotations[i, 0].copy(), translation=tracks.human.root_translation[i].copy())
                for i in range(len(entry.features))
            ]
            cond = ConditionSet.from_mesh(entry.object_mesh, config.n_points, corpus.prompt_id(entry.prompt), roots[0], seed=entry.record.seed)
            self.episodes.append(
                _Episode(features=normalizer.normalize(entry.features), roots=roots, points=cond.points, prompt_id=cond.prompt_id)
            )
        if skipped:
            logger.warning("skipped %d episodes shorter than the %d-frame window", skipped, config.window)
        if not self.episodes:
            raise EncodingError(f"no episode is long enough for a {config.window}-frame window")

    def __len__(self) -> int:
        return len(self.episodes)

    def window(self, episode: int, start: int) -> TrainingExample:
        ep = self.episodes[episode]
        p, n = self.config.prefix_length, self.config.segment_length
        frames = ep.features[start:start + p + n]
        cond = ConditionSet(points=ep.points, prompt_id=ep.prompt_id, root=ep.roots[start])
        return TrainingExample(prev=frames[:p], target=frames[p:], cond=cond)

    def sample(self, rng: np.random.Generator) -> TrainingExample:
        episode = int(rng.integers(len(self.episodes)))
        last = len(self.episodes[episode].features) - self.config.window
        return self.window(episode, int(rng.integers(last + 1)))

    def fixed(self, count: int, seed: int = 0) -> List[TrainingExample]:
        """A reproducible set of windows (held-out evaluation)"""
        rng = np.random.default_rng(seed)
        return [self.sample(rng) for _ in range(count)]


def simple_loss(
    params: Dict[str, Tensor],
    config: DenoiserConfig,
    schedule: Schedule,
    examples: Sequence[TrainingExample],
    rng: np.random.Generator,
) -> Tensor:
    """Mean over examples of ||x0 - x0_hat||^2 averaged over entries, at random steps"""
    total = Tensor(0.0)
    for ex in examples:
        t = int(rng.integers(1, schedule.T + 1))
        eps = rng.standard_normal(ex.target.shape)
        x_t = q_sample(schedule, ex.target, t, eps)
        x0_hat = denoise(params, config, ex.prev, x_t, ex.cond.at(t / schedule.T))
        total = total + F.mse(x0_hat, Tensor._wrap(np.array(ex.target)))
    return total * (1.0 / len(examples))


class Trainer:
    """
    Adam on L_simple over sampled windows

    Args:
        denoiser: Model updated in place
        schedule: Training noise schedule
        windows: Window sampler over the training split
        lr: Adam learning rate
        batch_size: Windows per step
        seed: Seeds window and noise draws
    """

    def __init__(
        self,
        denoiser: Denoiser,
        schedule: Schedule,
        windows: WindowSampler,
        lr: float = 1e-4,
        batch_size: int = 64,
        seed: int = 0,
    ):
        self.denoiser = denoiser
        self.schedule = schedule
        self.windows = windows
        self.batch_size = batch_size
        self.optimizer = Adam(lr=lr)
        self.rng = np.random.default_rng(seed)
        self.step_count = 0

    def step(self) -> float:
        """
        One optimizer step

        Raises:
            TrainingDivergedError: If the batch loss is NaN or infinite
        """
        batch = [self.windows.sample(self.rng) for _ in range(self.batch_size)]
        leaves = self.denoiser.leaves()
        with Tape():
            loss = simple_loss(leaves, self.denoiser.config, self.schedule, batch, self.rng)
            grads = backward(loss)
        value = loss.item()
        self.step_count += 1
        if not np.isfinite(value):
            raise TrainingDivergedError(self.step_count, value)
        new_params = self.optimizer.step(self.denoiser.params, {k: grads[t] for k, t in leaves.items()})
        self.denoiser.update(new_params)
        return value

    def train_epoch(self, steps: int, verbose: bool = False) -> List[float]:
        """Run `steps` optimizer steps; returns the per-step L_simple trace"""
        trace = []
        bar = tqdm(range(steps), disable=not verbose, desc="train")
        for _ in bar:
            trace.append(self.step())
            bar.set_postfix(loss=f"{trace[-1]:.4f}")
        if trace:
            logger.info("step %d: L_simple %.6f", self.step_count, trace[-1])
        return trace

    def evaluate(self, examples: Sequence[TrainingExample], seed: int = 0) -> float:
        """L_simple on fixed examples with fixed noise draws"""
        rng = np.random.default_rng(seed)
        return simple_loss(self.denoiser.constants(), self.denoiser.config, self.schedule, examples, rng).item()


def train_model(
    corpus: Corpus,
    rig: RigDef,
    config: DenoiserConfig,
    schedule: Schedule,
    steps: int,
    lr: float = 1e-4,
    batch_size: int = 64,
    seed: int = 0,
    normalizer: Optional[FeatureNormalizer] = None,
    verbose: bool = False,
):
    """
    Fit a fresh denoiser to a corpus

    Returns:
        (denoiser, normalizer, L_simple trace)
    """
    normalizer = normalizer or fit_normalizer(corpus)
    denoiser = Denoiser(config, seed=seed)
    trainer = Trainer(denoiser, schedule, WindowSampler(corpus, rig, config, normalizer), lr, batch_size, seed)
    trace = trainer.train_epoch(steps, verbose=verbose)
    return denoiser, normalizer, trace

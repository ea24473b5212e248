"""
Everything a run needs besides the noise

RunContext binds a RunSpec to a trained checkpoint: object mesh, scene,
clean prefix, conditioning, goals, and the helpers that turn noise into
stitched features and features into decoded world-space state.
"""

import logging
from dataclasses import dataclass
from typing import Callable, List, Optional, Union

import numpy as np

from ..datasynth import (
    Shape,
    ScenarioSpec,
    Verb,
    build_scene,
    episode_goals,
    idle_prefix,
    object_mesh,
    rest_position,
    synth_episode,
)
from ..diffusion import Checkpoint, ConditionSet, Denoiser, Schedule, cosine_schedule, rollout
from ..dno import NoiseState
from ..exceptions import ConfigError, RigError
from ..geometry import TriMesh, load_obj
from ..losses import DecodedState, GoalSpec, Scene, decode_state
from ..numerics import Tensor
from ..representation import (
    FeatureLayout,
    FeatureNormalizer,
    RootTransform,
    decode_features,
    encode_features,
    threshold_bits,
)
from ..rig import RigDef
from .models import RunSpec

logger = logging.getLogger(__name__)

ArrayLike = Union[np.ndarray, Tensor]


def root_at(features: np.ndarray, root: RootTransform, rig: RigDef, frame: int) -> RootTransform:
    """World root transform at one frame of denormalized features"""
    tracks = decode_features(features, root, rig)
    return RootTransform(
        rotation=tracks.human.rotations[frame, 0].copy(),
        translation=tracks.human.root_translation[frame].copy(),
    )


def root_after(features: np.ndarray, root: RootTransform, rig: RigDef) -> RootTransform:
    """
    Root transform of the frame that follows a feature block

    Heading and planar position of the next frame depend only on the block's
    velocities, so the last row is repeated to decode one frame past it.
    """
    features = np.asarray(features, dtype=np.float64)
    return root_at(np.concatenate([features, features[-1:]]), root, rig, len(features))


def scenario_for_spec(spec: RunSpec, prefix_frames: int, generated_frames: int) -> ScenarioSpec:
    words = spec.prompt.split()
    verbs = {v.value for v in Verb}
    verb = words[0] if words and words[0] in verbs else Verb.LIFT.value
    shape = spec.shape if spec.shape in {s.value for s in Shape} else Shape.BOX.value
    return ScenarioSpec(
        verb=verb,
        shape=shape,
        seed=spec.seed,
        table_height=spec.table_height,
        prefix_frames=prefix_frames,
        generated_frames=generated_frames,
        jitter=0.0,
    )


def default_goals(spec: RunSpec, rig: RigDef, prefix_frames: int, generated_frames: int) -> GoalSpec:
    """Keyframes of the scripted episode for the prompt, shifted to generated-frame indices"""
    episode = synth_episode(scenario_for_spec(spec, prefix_frames, generated_frames), rig)
    goals = episode_goals(episode)
    keep = [i for i, f in enumerate(goals.frames) if f >= prefix_frames]
    return GoalSpec(
        frames=[goals.frames[i] - prefix_frames for i in keep],
        translations=goals.translations[keep],
        rotations=goals.rotations[keep],
    )


@dataclass
class RunContext:
    spec: RunSpec
    rig: RigDef
    denoiser: Denoiser
    normalizer: FeatureNormalizer
    schedule: Schedule
    layout: FeatureLayout
    mesh: TriMesh
    scene: Scene
    prefix: np.ndarray  # (P, D) normalized
    prefix_root: RootTransform
    generation_root: RootTransform
    cond: ConditionSet
    goals: GoalSpec
    checkpoint_hash: str = ""

    @classmethod
    def build(cls, spec: RunSpec, checkpoint: Checkpoint, rig: RigDef) -> "RunContext":
        """
        Raises:
            ArtifactError: Checkpoint trained on another rig
            ConfigError: Prompt outside the checkpoint vocabulary
            FileNotFoundError: Missing object mesh file
        """
        checkpoint.check_rig(rig)
        if spec.prompt not in checkpoint.vocab:
            raise ConfigError("spec.prompt", f"'{spec.prompt}' is not in the model vocabulary {checkpoint.vocab}")
        config = checkpoint.config
        p, length = config.prefix_length, config.segment_length
        generated = spec.n_segments * length

        mesh = load_obj(spec.object_mesh) if spec.object_mesh else object_mesh(Shape(spec.shape))
        scene = build_scene(spec.table_height)
        scenario = scenario_for_spec(spec, p, generated)
        idle = idle_prefix(scenario, rig)
        if spec.object_mesh:
            idle.obj.translations[:] = rest_position(mesh, spec.table_height, scenario.object_y)
        features = encode_features(idle, rig)
        first = len(features) - p
        prefix_root = RootTransform(
            rotation=idle.human.rotations[first, 0].copy(),
            translation=idle.human.root_translation[first].copy(),
        )
        prefix = features[first:]

        goals = spec.goals if spec.goals is not None else default_goals(spec, rig, p, generated)
        goals.check(generated)
        cond = ConditionSet.from_mesh(mesh, config.n_points, checkpoint.vocab.index(spec.prompt), prefix_root, seed=spec.seed)
        ctx = cls(
            spec=spec,
            rig=rig,
            denoiser=checkpoint.denoiser,
            normalizer=checkpoint.normalizer,
            schedule=cosine_schedule(config.steps),
            layout=FeatureLayout.for_rig(rig),
            mesh=mesh,
            scene=scene,
            prefix=checkpoint.normalizer.normalize(prefix),
            prefix_root=prefix_root,
            generation_root=root_after(prefix, prefix_root, rig),
            cond=cond,
            goals=goals,
            checkpoint_hash=checkpoint.config_hash,
        )
        logger.debug("run context: %d prefix + %d generated frames, %d goal keyframes", p, generated, len(goals))
        return ctx

    @property
    def prefix_frames(self) -> int:
        return self.prefix.shape[0]

    @property
    def segment_length(self) -> int:
        return self.denoiser.config.segment_length

    @property
    def generated_frames(self) -> int:
        return self.spec.n_segments * self.segment_length

    @property
    def dim(self) -> int:
        return self.layout.dim

    def draw_noise(self, seed: int) -> NoiseState:
        return NoiseState.draw(self.spec.n_segments, self.segment_length, self.dim, seed=seed)

    def blocks(self) -> List[slice]:
        return list(self.layout.blocks().values())

    def next_root(self, stitched: np.ndarray, start: int) -> RootTransform:
        """Root token of the window starting at `start`; the prefix root when decoding fails"""
        try:
            return root_at(self.normalizer.denormalize(stitched), self.prefix_root, self.rig, start)
        except RigError as e:
            logger.warning("root token falls back to the prefix root: %s", e)
            return self.prefix_root

    def rollout(self, noise: ArrayLike, fix: Optional[Callable[[int, Tensor], Tensor]] = None) -> Tensor:
        """Stitched normalized features (P + S * L, D) from noise (S, L, D)"""
        segments = [noise[n] for n in range(noise.shape[0])]
        return rollout(self.denoiser, self.prefix, self.cond, segments, self.schedule, fix=fix, next_root=self.next_root)

    def generated(self, stitched: ArrayLike) -> ArrayLike:
        """Denormalized generated rows of a stitched sequence"""
        return self.normalizer.denormalize(stitched[self.prefix_frames:])

    def decode(self, stitched: ArrayLike, human: bool = True, meshes: bool = True) -> DecodedState:
        return decode_state(self.generated(stitched), self.generation_root, self.rig, human=human, meshes=meshes)

    def contact_bits(self, stitched: np.ndarray) -> np.ndarray:
        """Binary contacts (G, A) of the generated rows"""
        return threshold_bits(self.generated(np.asarray(stitched))[:, self.layout.contact_bits])

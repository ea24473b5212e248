"""
Data models for scripted episode synthesis
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..config import DefaultsConfig
from ..exceptions import EncodingError
from ..geometry import TriMesh
from ..losses.models import Scene
from ..representation import RootTransform, WorldTracks


class Verb(Enum):
    """Scripted actions and their object motion (peak offset, final offset) in meters"""
    LIFT = "lift"
    PLACE = "place"
    PASS = "pass"

    @property
    def motion(self) -> Tuple[Tuple[float, float, float], Tuple[float, float, float]]:
        return {
            Verb.LIFT: ((0.0, 0.0, 0.15), (0.0, 0.0, 0.0)),
            Verb.PLACE: ((0.0, 0.0, 0.05), (0.10, 0.0, 0.0)),
            Verb.PASS: ((-0.10, 0.0, 0.10), (-0.15, 0.0, 0.0)),
        }[self]


class Shape(Enum):
    BOX = "box"
    CYLINDER = "cylinder"
    SPHERE = "sphere"


VERBS = tuple(Verb)
SHAPES = tuple(Shape)


@dataclass
class ScenarioSpec:
    """One scripted episode; duration is prefix + generated frames"""
    verb: Verb = Verb.LIFT
    shape: Shape = Shape.BOX
    seed: int = 0
    table_height: float = DefaultsConfig.TABLE_HEIGHT
    object_y: float = 0.38
    prefix_frames: int = DefaultsConfig.PREFIX_FRAMES
    generated_frames: int = DefaultsConfig.GENERATED_FRAMES
    fps: int = DefaultsConfig.FPS
    jitter: float = 0.01

    def __post_init__(self):
        self.verb = Verb(self.verb)
        self.shape = Shape(self.shape)
        if self.duration < self.prefix_frames + 1:
            raise EncodingError(f"duration {self.duration} must exceed the prefix of {self.prefix_frames} frames")

    @property
    def duration(self) -> int:
        return self.prefix_frames + self.generated_frames

    @property
    def prompt(self) -> str:
        return f"{self.verb.value} {self.shape.value}"


@dataclass
class PhaseBounds:
    """
    Frame boundaries of the scripted phases (half-open intervals)

    The default timeline is the 115-frame layout; other durations scale it.
    """
    idle: Tuple[int, int] = (0, 15)
    reach: Tuple[int, int] = (15, 35)
    approach: Tuple[int, int] = (35, 40)
    contact: Tuple[int, int] = (40, 95)
    carry: Tuple[int, int] = (45, 70)
    place: Tuple[int, int] = (70, 90)
    release: Tuple[int, int] = (95, 100)
    retreat: Tuple[int, int] = (100, 115)

    @classmethod
    def for_duration(cls, duration: int, prefix: int) -> "PhaseBounds":
        if duration == 115 and prefix == 15:
            return cls()
        base = cls()
        span = duration - prefix

        def scale(f: int) -> int:
            return f if f <= 15 else prefix + int(round((f - 15) * span / 100))

        bounds = {name: (scale(a), scale(b)) for name, (a, b) in base.to_dict().items()}
        bounds["idle"] = (0, prefix)
        return cls(**bounds)

    def to_dict(self) -> Dict[str, Tuple[int, int]]:
        return {
            "idle": self.idle,
            "reach": self.reach,
            "approach": self.approach,
            "contact": self.contact,
            "carry": self.carry,
            "place": self.place,
            "release": self.release,
            "retreat": self.retreat,
        }


@dataclass
class Episode:
    """Synthesized episode: world tracks, scene, object mesh and bookkeeping"""
    spec: ScenarioSpec
    tracks: WorldTracks
    scene: Scene
    object_mesh: TriMesh  # rest pose, centred at the origin
    phases: PhaseBounds
    contact_counts: Dict[str, int] = field(default_factory=dict)
    goal_frames: Optional[np.ndarray] = None

    @property
    def prompt(self) -> str:
        return self.spec.prompt


@dataclass
class CorpusRecord:
    """One row of labels.csv"""
    file: str
    prompt: str
    verb: str
    shape: str
    seed: int
    split: str

    @property
    def name(self) -> str:
        return self.file.rsplit("/", 1)[-1].rsplit(".", 1)[0]


@dataclass
class CorpusEntry:
    """A loaded episode: encoded features plus its labels and object mesh"""
    record: CorpusRecord
    features: np.ndarray  # (N, D)
    root: RootTransform
    object_mesh: TriMesh
    meta: Dict = field(default_factory=dict)

    @property
    def prompt(self) -> str:
        return self.record.prompt

    @property
    def verb(self) -> str:
        return self.record.verb


@dataclass
class Corpus:
    """Episodes of a corpus directory with its prompt vocabulary"""
    path: str
    vocab: List[str]
    entries: List[CorpusEntry] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.entries)

    def split(self, name: str) -> "Corpus":
        return Corpus(path=self.path, vocab=self.vocab, entries=[e for e in self.entries if e.record.split == name])

    def prompt_id(self, prompt: str) -> int:
        return self.vocab.index(prompt)

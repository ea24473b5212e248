"""
Run configuration

One versioned JSON document holds everything a run needs: model shape,
training schedule, both optimization phases, the objective weights and the
artifact paths. Every artifact records the hash of the config that made it.
"""

import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Callable, Dict, Optional, Union

from .config import DefaultsConfig
from .diffusion import DenoiserConfig
from .dno import DnoConfig
from .exceptions import ConfigError
from .losses import LossWeights

logger = logging.getLogger(__name__)


def canonical_hash(payload: Any) -> str:
    """sha256 of the canonical (sorted, compact) JSON encoding"""
    text = json.dumps(payload, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _reject_unknown(cls, data: Dict[str, Any], prefix: str) -> None:
    if not isinstance(data, dict):
        raise ConfigError(prefix or "config", f"expected an object, got {type(data).__name__}")
    known = {f.name for f in fields(cls)}
    for key in data:
        if key not in known:
            raise ConfigError(f"{prefix}.{key}" if prefix else key, "unknown key")


@dataclass
class TrainingConfig:
    """Denoiser training schedule"""
    steps: int = 2000
    batch_size: int = 64
    lr: float = 1e-4
    corpus_size: int = 90
    holdout: float = 0.1

    def validate(self, prefix: str = "training") -> None:
        if not isinstance(self.steps, int) or self.steps < 0:
            raise ConfigError(f"{prefix}.steps", f"must be a non-negative integer, got {self.steps!r}")
        if not isinstance(self.batch_size, int) or self.batch_size < 1:
            raise ConfigError(f"{prefix}.batch_size", f"must be a positive integer, got {self.batch_size!r}")
        if self.lr <= 0:
            raise ConfigError(f"{prefix}.lr", f"must be positive, got {self.lr!r}")
        if not isinstance(self.corpus_size, int) or self.corpus_size < 0:
            raise ConfigError(f"{prefix}.corpus_size", f"must be a non-negative integer, got {self.corpus_size!r}")
        if not 0.0 <= self.holdout < 1.0:
            raise ConfigError(f"{prefix}.holdout", f"must be in [0, 1), got {self.holdout!r}")

    @classmethod
    def from_dict(cls, data: Dict[str, Any], prefix: str = "training") -> "TrainingConfig":
        _reject_unknown(cls, data, prefix)
        return cls(**data)


@dataclass
class ModelConfig:
    """
    Denoiser shape and the rig it is trained on

    prefix_frames and generated_frames are the per-segment prefix (P) and
    segment length (L); steps is the diffusion length T.
    """
    rig: str = "toy"
    prefix_frames: int = DefaultsConfig.PREFIX_FRAMES
    generated_frames: int = DefaultsConfig.GENERATED_FRAMES
    steps: int = 8
    n_layers: int = 4
    hidden: int = 128
    heads: int = 4
    n_points: int = 64
    point_width: int = 64
    ff_mult: int = 2
    type_embeddings: bool = True

    def denoiser_config(self, feature_dim: int, vocab_size: int) -> DenoiserConfig:
        return DenoiserConfig(
            feature_dim=feature_dim,
            vocab_size=vocab_size,
            segment_length=self.generated_frames,
            prefix_length=self.prefix_frames,
            n_layers=self.n_layers,
            hidden=self.hidden,
            heads=self.heads,
            n_points=self.n_points,
            point_width=self.point_width,
            ff_mult=self.ff_mult,
            steps=self.steps,
            type_embeddings=self.type_embeddings,
        )

    def validate(self, prefix: str = "model") -> None:
        if self.rig not in ("toy", "omomo"):
            raise ConfigError(f"{prefix}.rig", f"unknown rig '{self.rig}'")
        try:
            self.denoiser_config(feature_dim=1, vocab_size=1)
        except ConfigError as e:
            raise ConfigError(e.key_path.replace("model.", f"{prefix}.", 1), e.message)

    @classmethod
    def from_dict(cls, data: Dict[str, Any], prefix: str = "model") -> "ModelConfig":
        _reject_unknown(cls, data, prefix)
        return cls(**data)


@dataclass
class DnoSection:
    """Optimizer settings of both phases and of the single-phase ablation (phase2 when unset)"""
    phase1: DnoConfig = field(default_factory=DnoConfig.grab)
    phase2: DnoConfig = field(default_factory=DnoConfig.grab)
    single: Optional[DnoConfig] = None

    def to_dict(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {"phase1": self.phase1.to_dict(), "phase2": self.phase2.to_dict()}
        if self.single is not None:
            out["single"] = self.single.to_dict()
        return out

    @classmethod
    def from_dict(cls, data: Dict[str, Any], prefix: str = "dno") -> "DnoSection":
        _reject_unknown(cls, data, prefix)
        kwargs = {name: DnoConfig.from_dict(data[name], prefix=f"{prefix}.{name}") for name in ("phase1", "phase2", "single") if data.get(name) is not None}
        return cls(**kwargs)


@dataclass
class PathsConfig:
    corpus: str = "data/corpus"
    checkpoint: str = "runs/model.ck"
    runs: str = "runs"

    @classmethod
    def from_dict(cls, data: Dict[str, Any], prefix: str = "paths") -> "PathsConfig":
        _reject_unknown(cls, data, prefix)
        for key, value in data.items():
            if not isinstance(value, str):
                raise ConfigError(f"{prefix}.{key}", f"must be a string, got {value!r}")
        return cls(**data)


@dataclass
class RunConfig:
    """Complete configuration of data generation, training and optimization"""
    version: int = DefaultsConfig.CONFIG_VERSION
    preset: str = "grab"
    seed: int = 0
    table_height: float = DefaultsConfig.TABLE_HEIGHT
    n_segments: int = 1
    training: TrainingConfig = field(default_factory=TrainingConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    dno: DnoSection = field(default_factory=DnoSection)
    weights: LossWeights = field(default_factory=LossWeights.grab)
    paths: PathsConfig = field(default_factory=PathsConfig)

    def validate(self) -> None:
        if self.version != DefaultsConfig.CONFIG_VERSION:
            raise ConfigError("version", f"unsupported config version {self.version!r}")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError("seed", f"must be a non-negative integer, got {self.seed!r}")
        if not isinstance(self.n_segments, int) or self.n_segments < 1:
            raise ConfigError("n_segments", f"must be a positive integer, got {self.n_segments!r}")
        if self.table_height <= 0:
            raise ConfigError("table_height", f"must be positive, got {self.table_height!r}")
        self.training.validate()
        self.model.validate()
        self.dno.phase1.validate("dno.phase1")
        self.dno.phase2.validate("dno.phase2")
        if self.dno.single is not None:
            self.dno.single.validate("dno.single")
        self.weights.validate()

    def to_dict(self) -> Dict[str, Any]:
        return {
            "version": self.version,
            "preset": self.preset,
            "seed": self.seed,
            "table_height": self.table_height,
            "n_segments": self.n_segments,
            "training": asdict(self.training),
            "model": asdict(self.model),
            "dno": self.dno.to_dict(),
            "weights": self.weights.to_dict(),
            "paths": asdict(self.paths),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunConfig":
        """
        Build from a parsed config document

        Raises:
            ConfigError: Unknown keys (named by dotted path) or invalid values
        """
        _reject_unknown(cls, data, "")
        sections = {
            "training": TrainingConfig.from_dict,
            "model": ModelConfig.from_dict,
            "dno": DnoSection.from_dict,
            "weights": LossWeights.from_dict,
            "paths": PathsConfig.from_dict,
        }
        base = preset(data.get("preset", "grab"))
        kwargs: Dict[str, Any] = {}
        for key, value in data.items():
            if key in sections:
                merged = _merge(_section_dict(getattr(base, key)), value, key)
                kwargs[key] = sections[key](merged, key)
            else:
                kwargs[key] = value
        config = cls(**{**{f.name: getattr(base, f.name) for f in fields(cls)}, **kwargs})
        config.validate()
        return config

    def config_hash(self) -> str:
        return canonical_hash(self.to_dict())


def _section_dict(section: Any) -> Dict[str, Any]:
    return section.to_dict() if hasattr(section, "to_dict") else asdict(section)


def _merge(base: Dict[str, Any], override: Any, prefix: str) -> Dict[str, Any]:
    """Preset values overlaid with the document's values, one level of nesting deep"""
    if not isinstance(override, dict):
        raise ConfigError(prefix, f"expected an object, got {type(override).__name__}")
    merged = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = {**merged[key], **value}
        else:
            merged[key] = value
    return merged


def _grab() -> RunConfig:
    return RunConfig(preset="grab")


def _omomo() -> RunConfig:
    return RunConfig(
        preset="omomo",
        model=ModelConfig(rig="omomo", prefix_frames=1, generated_frames=119, steps=14),
        dno=DnoSection(phase1=DnoConfig.omomo(), phase2=DnoConfig.omomo()),
        weights=LossWeights.omomo(),
    )


def _tiny() -> RunConfig:
    return RunConfig(
        preset="tiny",
        training=TrainingConfig(steps=200, batch_size=8, lr=1e-3, corpus_size=9, holdout=0.0),
        model=ModelConfig(prefix_frames=2, generated_frames=8, steps=4, n_layers=1, hidden=32, heads=2, n_points=16, point_width=16),
        dno=DnoSection(phase1=DnoConfig.grab(iterations=20), phase2=DnoConfig.grab(iterations=20)),
    )


def _high_penetration() -> RunConfig:
    return RunConfig(preset="high-penetration", weights=LossWeights.high_penetration())


PRESETS: Dict[str, Callable[[], RunConfig]] = {
    "grab": _grab,
    "omomo": _omomo,
    "tiny": _tiny,
    "high-penetration": _high_penetration,
}


def preset(name: str) -> RunConfig:
    if name not in PRESETS:
        raise ConfigError("preset", f"unknown preset '{name}', expected one of {sorted(PRESETS)}")
    return PRESETS[name]()


def load_run_config(path: Union[str, Path]) -> RunConfig:
    """
    Read a JSON config file

    Raises:
        FileNotFoundError: Missing file
        ConfigError: Malformed JSON, unknown keys or invalid values
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Config not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigError("config", f"invalid JSON at line {e.lineno}: {e.msg}")
    config = RunConfig.from_dict(data)
    logger.info("✓ Loaded config '%s' from %s", config.preset, path)
    return config


def save_run_config(config: RunConfig, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    logger.info("✓ Saved config to %s", path)
    return path

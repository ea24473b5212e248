"""
HOI-DNO - Contact-Accurate Human-Object Interaction by Diffusion Noise Optimization
"""

from .config import DefaultsConfig
from .exceptions import (
    ArtifactError,
    ConfigError,
    HoiDnoError,
    MeshError,
    MetricError,
    OptimizationDivergedError,
    RigError,
)
from .rig import RigDef, build_rig
from .representation import FeatureLayout, FeatureNormalizer, load_sequence, save_sequence
from .datasynth import load_corpus, make_dataset
from .diffusion import load_checkpoint, save_checkpoint, train_model
from .dno import DnoConfig, dno_optimize
from .losses import GoalSpec, LossWeights
from .pipeline import Mode, RunSpec, run, run_batch
from .run_config import RunConfig, load_run_config, preset

__version__ = '0.1.0'

__all__ = [
    # Config
    'DefaultsConfig',
    'RunConfig',
    'load_run_config',
    'preset',
    # Errors
    'ArtifactError',
    'ConfigError',
    'HoiDnoError',
    'MeshError',
    'MetricError',
    'OptimizationDivergedError',
    'RigError',
    # Rig and features
    'RigDef',
    'build_rig',
    'FeatureLayout',
    'FeatureNormalizer',
    'load_sequence',
    'save_sequence',
    # Data and model
    'load_corpus',
    'make_dataset',
    'load_checkpoint',
    'save_checkpoint',
    'train_model',
    # Optimization
    'DnoConfig',
    'dno_optimize',
    'GoalSpec',
    'LossWeights',
    'Mode',
    'RunSpec',
    'run',
    'run_batch',
]

"""
Segment diffusion model: schedule, denoiser, samplers and training
"""

from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .denoiser import Denoiser, denoise, encode_points, init_params
from .guidance import classifier_guidance_sample
from .models import ConditionSet, DenoiserConfig, Schedule
from .sampler import DenoiseFn, ddim_sample, ddim_update, ddpm_sample, q_sample, rollout
from .schedule import cosine_schedule
from .trainer import (
    Trainer,
    TrainingExample,
    WindowSampler,
    fit_normalizer,
    shuffled_labels,
    simple_loss,
    train_model,
)

__all__ = [
    "Checkpoint",
    "ConditionSet",
    "DenoiseFn",
    "Denoiser",
    "DenoiserConfig",
    "Schedule",
    "Trainer",
    "TrainingExample",
    "WindowSampler",
    "classifier_guidance_sample",
    "cosine_schedule",
    "ddim_sample",
    "ddim_update",
    "ddpm_sample",
    "denoise",
    "encode_points",
    "fit_normalizer",
    "init_params",
    "load_checkpoint",
    "q_sample",
    "rollout",
    "save_checkpoint",
    "shuffled_labels",
    "simple_loss",
    "train_model",
]

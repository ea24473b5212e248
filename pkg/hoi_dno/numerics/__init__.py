"""
Dense float64 tensors with a gradient tape
"""

from .tensor import Tensor, Tape, GradientMap, backward, no_grad, active_tape, as_tensor
from .primitives import PRIMITIVES, forward, checkpoint
from .optim import Adam, AdamState, adam_step
from .snapshot import encode_tensor, decode_tensor, save_snapshot, load_snapshot
from . import functional
from . import primitives

__all__ = [
    "Tensor",
    "Tape",
    "GradientMap",
    "backward",
    "no_grad",
    "active_tape",
    "as_tensor",
    "PRIMITIVES",
    "forward",
    "checkpoint",
    "Adam",
    "AdamState",
    "adam_step",
    "encode_tensor",
    "decode_tensor",
    "save_snapshot",
    "load_snapshot",
    "functional",
    "primitives",
]

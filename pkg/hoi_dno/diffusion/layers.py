"""
Transformer building blocks over named parameter maps

Every block reads its weights from a Mapping[str, Tensor] under a dotted
prefix (e.g. "layers.0.self_attn.q.w"), so the same code runs on constant
parameters at inference and on gradient-tracked leaves during training.
The init_* helpers add the matching numpy arrays to a dict.
"""

from typing import Dict, Mapping

import numpy as np

from ..numerics import Tensor
from ..numerics import functional as F
from ..numerics import primitives as P

Params = Mapping[str, Tensor]
Arrays = Dict[str, np.ndarray]


# ----------------------------------------------------------------------
# Initialization
# ----------------------------------------------------------------------

def init_linear(arrays: Arrays, name: str, fan_in: int, fan_out: int, rng: np.random.Generator, scale: float = 1.0) -> None:
    arrays[f"{name}.w"] = rng.normal(0.0, scale / np.sqrt(fan_in), size=(fan_in, fan_out))
    arrays[f"{name}.b"] = np.zeros(fan_out)


def init_norm(arrays: Arrays, name: str, width: int) -> None:
    arrays[f"{name}.g"] = np.ones(width)
    arrays[f"{name}.b"] = np.zeros(width)


def init_mlp(arrays: Arrays, name: str, fan_in: int, hidden: int, fan_out: int, rng: np.random.Generator) -> None:
    init_linear(arrays, f"{name}.0", fan_in, hidden, rng)
    init_linear(arrays, f"{name}.1", hidden, fan_out, rng)


def init_attention(arrays: Arrays, name: str, width: int, rng: np.random.Generator) -> None:
    for proj in ("q", "k", "v", "o"):
        init_linear(arrays, f"{name}.{proj}", width, width, rng)


# ----------------------------------------------------------------------
# Blocks
# ----------------------------------------------------------------------

def linear(params: Params, name: str, x: Tensor) -> Tensor:
    return F.linear(x, params[f"{name}.w"], params[f"{name}.b"])


def mlp(params: Params, name: str, x: Tensor) -> Tensor:
    return linear(params, f"{name}.1", P.gelu(linear(params, f"{name}.0", x)))


def norm(params: Params, name: str, x: Tensor) -> Tensor:
    return P.layer_norm(x) * params[f"{name}.g"] + params[f"{name}.b"]


def _split_heads(x: Tensor, heads: int) -> Tensor:
    n, width = x.shape
    return x.reshape(n, heads, width // heads).transpose(1, 0, 2)


def attention(params: Params, name: str, queries: Tensor, keys: Tensor, heads: int) -> Tensor:
    """
    Multi-head scaled dot-product attention

    Args:
        queries: (N, H) query tokens
        keys: (M, H) tokens providing keys and values
        heads: Number of heads; H must be divisible by it

    Returns:
        (N, H)
    """
    n, width = queries.shape
    q = _split_heads(linear(params, f"{name}.q", queries), heads)
    k = _split_heads(linear(params, f"{name}.k", keys), heads)
    v = _split_heads(linear(params, f"{name}.v", keys), heads)
    scores = P.matmul(q, k.swap_last()) * (1.0 / np.sqrt(width // heads))
    mixed = P.matmul(P.softmax(scores, axis=-1), v)
    return linear(params, f"{name}.o", mixed.transpose(1, 0, 2).reshape(n, width))


def timestep_features(t: float, width: int, max_period: float = 10000.0) -> np.ndarray:
    """Sinusoidal features of a continuous diffusion time t in [0, 1]"""
    half = width // 2
    freqs = np.exp(-np.log(max_period) * np.arange(half) / half)
    angles = 1000.0 * float(t) * freqs
    return np.concatenate([np.sin(angles), np.cos(angles)])

"""
Segment denoiser

A transformer decoder that predicts the clean segment x0 from the noisy
segment x_t. Self-attention runs over [prefix frames | noisy frames];
cross-attention reads a memory of

    point tokens (V)  object surface samples through a set encoder
    prompt token      learned embedding of the prompt id
    time token        sinusoidal features of t/T through an MLP
    root token        cont6d + translation of the first-frame root

each source tagged with a learned type embedding. Point tokens carry no
position, so the output is invariant to the order of the sampled points.
All inputs and outputs are normalized features.
"""

import logging
from typing import Dict, Mapping, Optional, Union

import numpy as np

from ..exceptions import ShapeError
from ..numerics import Tensor, as_tensor
from ..numerics import primitives as P
from . import layers
from .models import ConditionSet, DenoiserConfig

logger = logging.getLogger(__name__)

ArrayLike = Union[np.ndarray, Tensor]

TYPE_PREFIX, TYPE_NOISY, TYPE_POINTS, TYPE_PROMPT, TYPE_TIME, TYPE_ROOT = range(6)
N_TYPES = 6


def init_params(config: DenoiserConfig, seed: int = 0) -> Dict[str, np.ndarray]:
    """Fresh parameter arrays for a config, deterministic per seed"""
    rng = np.random.default_rng(seed)
    h, c = config.hidden, config.point_width
    arrays: Dict[str, np.ndarray] = {}

    layers.init_linear(arrays, "frame_in", config.feature_dim, h, rng)
    arrays["pos_embed"] = rng.normal(0.0, 0.02, size=(config.window, h))
    arrays["type_embed"] = rng.normal(0.0, 0.02, size=(N_TYPES, h))
    layers.init_mlp(arrays, "points.local", 3, c, c, rng)
    layers.init_linear(arrays, "points.out", 2 * c, h, rng)
    arrays["prompt_embed"] = rng.normal(0.0, 1.0, size=(config.vocab_size, h))
    layers.init_mlp(arrays, "time", h, h, h, rng)
    layers.init_linear(arrays, "root", 9, h, rng)

    ff = config.ff_mult * h
    for i in range(config.n_layers):
        name = f"layers.{i}"
        layers.init_norm(arrays, f"{name}.norm_self", h)
        layers.init_attention(arrays, f"{name}.self_attn", h, rng)
        layers.init_norm(arrays, f"{name}.norm_cross", h)
        layers.init_attention(arrays, f"{name}.cross_attn", h, rng)
        layers.init_norm(arrays, f"{name}.norm_ff", h)
        layers.init_mlp(arrays, f"{name}.ff", h, ff, h, rng)

    layers.init_norm(arrays, "head_norm", h)
    layers.init_linear(arrays, "head", h, config.feature_dim, rng, scale=0.1)
    return arrays


def _type_row(params: Mapping[str, Tensor], config: DenoiserConfig, kind: int) -> Optional[Tensor]:
    if not config.type_embeddings:
        return None
    return params["type_embed"][kind]


def _tagged(x: Tensor, tag: Optional[Tensor]) -> Tensor:
    return x if tag is None else x + tag


def encode_points(params: Mapping[str, Tensor], points: np.ndarray) -> Tensor:
    """Set encoder: per-point MLP, max-pooled global feature broadcast back, projection"""
    local = layers.mlp(params, "points.local", Tensor._wrap(np.asarray(points, dtype=np.float64)))
    pooled = local.max(axis=0, keepdims=True)
    n = local.shape[0]
    broadcast = pooled * Tensor._wrap(np.ones((n, 1)))
    return layers.linear(params, "points.out", P.concat([local, broadcast], axis=1))


def condition_tokens(params: Mapping[str, Tensor], config: DenoiserConfig, cond: ConditionSet) -> Tensor:
    """Cross-attention memory (V + 3, H)"""
    if cond.points.shape != (config.n_points, 3):
        raise ShapeError("condition_tokens", cond.points.shape, (config.n_points, 3), "object point set")
    if not 0 <= cond.prompt_id < config.vocab_size:
        raise ShapeError("condition_tokens", (cond.prompt_id,), (config.vocab_size,), "prompt id out of vocabulary")
    h = config.hidden
    points = _tagged(encode_points(params, cond.points), _type_row(params, config, TYPE_POINTS))
    prompt = _tagged(params["prompt_embed"][cond.prompt_id], _type_row(params, config, TYPE_PROMPT))
    time_in = Tensor._wrap(layers.timestep_features(cond.t, h))
    time = _tagged(layers.mlp(params, "time", time_in.reshape(1, h)).reshape(h), _type_row(params, config, TYPE_TIME))
    root_in = Tensor._wrap(cond.root.to_vector().reshape(1, 9))
    root = _tagged(layers.linear(params, "root", root_in).reshape(h), _type_row(params, config, TYPE_ROOT))
    return P.concat([points, P.stack([prompt, time, root], axis=0)], axis=0)


def denoise(
    params: Mapping[str, Tensor],
    config: DenoiserConfig,
    prev: ArrayLike,
    x_t: ArrayLike,
    cond: ConditionSet,
) -> Tensor:
    """
    Predict the clean segment

    Args:
        params: Parameter map (constants or gradient-tracked leaves)
        config: Model shape
        prev: (prefix_length, D) clean frames of the previous segment
        x_t: (segment_length, D) noisy segment
        cond: Conditioning with t set to the diffusion time fraction

    Returns:
        x0 estimate (segment_length, D), differentiable w.r.t. prev and x_t

    Raises:
        ShapeError: If prev or x_t disagree with the config
    """
    prev, x_t = as_tensor(prev), as_tensor(x_t)
    p, n, d = config.prefix_length, config.segment_length, config.feature_dim
    if prev.shape != (p, d):
        raise ShapeError("denoise", prev.shape, (p, d), "prefix frames")
    if x_t.shape != (n, d):
        raise ShapeError("denoise", x_t.shape, (n, d), "noisy segment")

    frames = layers.linear(params, "frame_in", P.concat([prev, x_t], axis=0)) + params["pos_embed"]
    if config.type_embeddings:
        kinds = np.array([TYPE_PREFIX] * p + [TYPE_NOISY] * n)
        frames = frames + params["type_embed"][kinds]
    memory = condition_tokens(params, config, cond)

    x = frames
    for i in range(config.n_layers):
        name = f"layers.{i}"
        h = layers.norm(params, f"{name}.norm_self", x)
        x = x + layers.attention(params, f"{name}.self_attn", h, h, config.heads)
        h = layers.norm(params, f"{name}.norm_cross", x)
        x = x + layers.attention(params, f"{name}.cross_attn", h, memory, config.heads)
        h = layers.norm(params, f"{name}.norm_ff", x)
        x = x + layers.mlp(params, f"{name}.ff", h)

    out = layers.linear(params, "head", layers.norm(params, "head_norm", x))
    return out[p:]


class Denoiser:
    """
    Parameters bound to a config

    Calling the instance runs denoise on constant parameters, which is what
    sampling and noise optimization need (the model is frozen there).
    """

    def __init__(self, config: DenoiserConfig, params: Optional[Dict[str, np.ndarray]] = None, seed: int = 0):
        self.config = config
        self.params: Dict[str, np.ndarray] = params if params is not None else init_params(config, seed)
        self._constants: Optional[Dict[str, Tensor]] = None

    @property
    def n_parameters(self) -> int:
        return int(sum(a.size for a in self.params.values()))

    def constants(self) -> Dict[str, Tensor]:
        if self._constants is None:
            self._constants = {k: Tensor._wrap(np.array(v)) for k, v in self.params.items()}
        return self._constants

    def leaves(self) -> Dict[str, Tensor]:
        """Fresh gradient-tracked leaves for one training step"""
        return {k: Tensor(v, requires_grad=True, name=k) for k, v in self.params.items()}

    def update(self, params: Dict[str, np.ndarray]) -> None:
        self.params = params
        self._constants = None

    def __call__(self, prev: ArrayLike, x_t: ArrayLike, cond: ConditionSet) -> Tensor:
        return denoise(self.constants(), self.config, prev, x_t, cond)

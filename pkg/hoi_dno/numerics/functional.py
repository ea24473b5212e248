"""
Composite tensor helpers built from primitives
"""

from typing import Optional, Sequence

import numpy as np

from . import primitives as P
from .tensor import Tensor, as_tensor


def linear(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None) -> Tensor:
    """x @ weight (+ bias); weight is (in, out)"""
    out = P.matmul(x, weight) if x.ndim >= 2 else P.matmul(x.reshape(1, -1), weight).reshape(-1)
    return out + bias if bias is not None else out


def square(x: Tensor) -> Tensor:
    return x * x


def sq_norm(x: Tensor, axis: int = -1) -> Tensor:
    return (x * x).sum(axis=axis)


def norm(x: Tensor, axis: int = -1, eps: float = 0.0) -> Tensor:
    return P.sqrt(sq_norm(x, axis=axis) + eps)


def normalize(x: Tensor, axis: int = -1, eps: float = 1e-12) -> Tensor:
    n = norm(x, axis=axis, eps=eps)
    return x / P.reshape(n, n.shape[:axis % x.ndim] + (1,) + n.shape[axis % x.ndim:])


def dot(a: Tensor, b: Tensor, axis: int = -1) -> Tensor:
    return (a * b).sum(axis=axis)


def cross(a: Tensor, b: Tensor) -> Tensor:
    """Cross product over the last axis (length 3)"""
    a0, a1, a2 = a[..., 0], a[..., 1], a[..., 2]
    b0, b1, b2 = b[..., 0], b[..., 1], b[..., 2]
    return P.stack([a1 * b2 - a2 * b1, a2 * b0 - a0 * b2, a0 * b1 - a1 * b0], axis=-1)


def relu(x: Tensor) -> Tensor:
    return P.maximum(x, 0.0)


def mse(a: Tensor, b) -> Tensor:
    d = a - b
    return (d * d).mean()


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    return P.concat([as_tensor(t) for t in tensors], axis=axis)


def stack(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    return P.stack([as_tensor(t) for t in tensors], axis=axis)


def zeros(*shape: int) -> Tensor:
    return Tensor._wrap(np.zeros(shape))


def ones(*shape: int) -> Tensor:
    return Tensor._wrap(np.ones(shape))


def constant(value) -> Tensor:
    return Tensor(value)


def parameter(value, name: Optional[str] = None) -> Tensor:
    return Tensor(value, requires_grad=True, name=name)

"""
Finite-difference oracles shared by the gradient tests
"""

from typing import Callable, Sequence

import numpy as np

from hoi_dno.numerics import Tape, Tensor, backward


def numeric_grad(fn: Callable[[np.ndarray], float], x: np.ndarray, eps: float = 1e-6) -> np.ndarray:
    """Central differences of a scalar function of one array"""
    x = np.array(x, dtype=np.float64)
    grad = np.zeros_like(x)
    flat = x.reshape(-1)
    g = grad.reshape(-1)
    for i in range(flat.size):
        old = flat[i]
        flat[i] = old + eps
        up = fn(x.copy())
        flat[i] = old - eps
        down = fn(x.copy())
        flat[i] = old
        g[i] = (up - down) / (2.0 * eps)
    return grad


def tape_grads(fn: Callable[..., Tensor], *arrays: np.ndarray) -> Sequence[np.ndarray]:
    """Reverse-mode gradients of fn(*tensors) with respect to every argument"""
    leaves = [Tensor(a, requires_grad=True) for a in arrays]
    with Tape():
        out = fn(*leaves)
        grads = backward(out)
    return [grads[leaf] for leaf in leaves]


def assert_grads_match(
    fn: Callable[..., Tensor],
    *arrays: np.ndarray,
    rtol: float = 1e-3,
    atol: float = 1e-6,
    eps: float = 1e-6,
) -> None:
    """Compare tape gradients of fn against central differences, argument by argument"""
    analytic = tape_grads(fn, *arrays)
    for k, array in enumerate(arrays):
        def partial(x: np.ndarray, k: int = k) -> float:
            args = [Tensor(a) for a in arrays]
            args[k] = Tensor(x)
            return fn(*args).item()

        expected = numeric_grad(partial, array, eps)
        np.testing.assert_allclose(analytic[k], expected, rtol=rtol, atol=atol, err_msg=f"argument {k}")

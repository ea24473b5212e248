"""
Tensor and gradient tape

Dense float64 arrays with reverse-mode differentiation. A Tape records every
primitive applied to tensors that require gradients while the tape is active;
backward replays the records in reverse creation order, which is a valid
reverse topological order because an operation can only consume tensors that
already exist.

Public API:
- Tensor(data, requires_grad=False, name=None)
- Tape() as a context manager, Tape.backward(root) -> GradientMap
- backward(root) -> GradientMap (uses the tape that recorded root)
- no_grad() context manager
"""

from contextlib import contextmanager
from contextvars import ContextVar
from dataclasses import dataclass
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from ..exceptions import GradientError

_ACTIVE_TAPE: ContextVar[Optional["Tape"]] = ContextVar("hoi_dno_active_tape", default=None)


def active_tape() -> Optional["Tape"]:
    """Return the tape currently recording, if any"""
    return _ACTIVE_TAPE.get()


@contextmanager
def no_grad() -> Iterator[None]:
    """Suspend recording inside the block"""
    token = _ACTIVE_TAPE.set(None)
    try:
        yield
    finally:
        _ACTIVE_TAPE.reset(token)


class Tensor:
    """
    Immutable float64 array with an optional gradient slot

    The value array is read-only after construction. `grad` is filled by a
    backward pass for leaves created with requires_grad=True.
    """

    __slots__ = ("data", "grad", "requires_grad", "name", "_tape", "__weakref__")

    __array_priority__ = 100.0

    def __init__(self, data: Any, requires_grad: bool = False, name: Optional[str] = None):
        array = np.array(data, dtype=np.float64)
        array.setflags(write=False)
        self.data: np.ndarray = array
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad
        self.name = name
        self._tape: Optional["Tape"] = None

    @classmethod
    def _wrap(cls, array: np.ndarray, requires_grad: bool = False) -> "Tensor":
        """Wrap a freshly computed array without copying"""
        tensor = cls.__new__(cls)
        if array.dtype != np.float64:
            array = array.astype(np.float64)
        array.setflags(write=False)
        tensor.data = array
        tensor.grad = None
        tensor.requires_grad = requires_grad
        tensor.name = None
        tensor._tape = None
        return tensor

    # ------------------------------------------------------------------
    # Introspection
    # ------------------------------------------------------------------

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else float(self.data)

    def detach(self) -> "Tensor":
        return Tensor._wrap(self.data)

    def __len__(self) -> int:
        return self.data.shape[0]

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}{label}, requires_grad={self.requires_grad})"

    # ------------------------------------------------------------------
    # Operators (thin wrappers over registered primitives)
    # ------------------------------------------------------------------

    def __add__(self, other: Any) -> "Tensor":
        from . import primitives as P
        return P.add(self, other)

    def __radd__(self, other: Any) -> "Tensor":
        from . import primitives as P
        return P.add(other, self)

    def __sub__(self, other: Any) -> "Tensor":
        from . import primitives as P
        return P.sub(self, other)

    def __rsub__(self, other: Any) -> "Tensor":
        from . import primitives as P
        return P.sub(other, self)

    def __mul__(self, other: Any) -> "Tensor":
        from . import primitives as P
        return P.mul(self, other)

    def __rmul__(self, other: Any) -> "Tensor":
        from . import primitives as P
        return P.mul(other, self)

    def __truediv__(self, other: Any) -> "Tensor":
        from . import primitives as P
        return P.div(self, other)

    def __rtruediv__(self, other: Any) -> "Tensor":
        from . import primitives as P
        return P.div(other, self)

    def __neg__(self) -> "Tensor":
        from . import primitives as P
        return P.neg(self)

    def __pow__(self, exponent: float) -> "Tensor":
        from . import primitives as P
        return P.power(self, exponent)

    def __matmul__(self, other: Any) -> "Tensor":
        from . import primitives as P
        return P.matmul(self, other)

    def __rmatmul__(self, other: Any) -> "Tensor":
        from . import primitives as P
        return P.matmul(other, self)

    def __getitem__(self, key: Any) -> "Tensor":
        from . import primitives as P
        return P.index(self, key)

    def sum(self, axis: Any = None, keepdims: bool = False) -> "Tensor":
        from . import primitives as P
        return P.reduce_sum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis: Any = None, keepdims: bool = False) -> "Tensor":
        from . import primitives as P
        return P.reduce_mean(self, axis=axis, keepdims=keepdims)

    def max(self, axis: Any = None, keepdims: bool = False) -> "Tensor":
        from . import primitives as P
        return P.reduce_max(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape: Any) -> "Tensor":
        from . import primitives as P
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return P.reshape(self, shape)

    def transpose(self, *axes: int) -> "Tensor":
        from . import primitives as P
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        return P.transpose(self, axes or None)

    def swap_last(self) -> "Tensor":
        """Swap the two trailing axes (batched matrix transpose)"""
        axes = list(range(self.ndim))
        axes[-1], axes[-2] = axes[-2], axes[-1]
        return self.transpose(tuple(axes))


@dataclass
class Record:
    """One primitive application on the tape"""
    primitive: Any
    inputs: Tuple[Tensor, ...]
    output: Tensor


class GradientMap:
    """Mapping tensor -> gradient array produced by one backward pass"""

    def __init__(self, grads: Dict[int, np.ndarray], tensors: Dict[int, Tensor]):
        self._grads = grads
        self._tensors = tensors

    def __getitem__(self, tensor: Tensor) -> np.ndarray:
        key = id(tensor)
        if key not in self._grads:
            return np.zeros(tensor.shape)
        return self._grads[key]

    def __contains__(self, tensor: Tensor) -> bool:
        return id(tensor) in self._grads

    def leaves(self) -> List[Tensor]:
        return [t for t in self._tensors.values() if t.requires_grad and t._tape is None]


class Tape:
    """
    Ordered record of primitive applications

    Use as a context manager; tensors produced inside the block from operands
    that require gradients are recorded here.
    """

    def __init__(self) -> None:
        self.records: List[Record] = []
        self._tokens: List[Any] = []

    def __enter__(self) -> "Tape":
        self._tokens.append(_ACTIVE_TAPE.set(self))
        return self

    def __exit__(self, *exc: Any) -> None:
        _ACTIVE_TAPE.reset(self._tokens.pop())

    def __len__(self) -> int:
        return len(self.records)

    def record(self, primitive: Any, inputs: Sequence[Tensor], output: Tensor) -> None:
        output._tape = self
        self.records.append(Record(primitive, tuple(inputs), output))

    def backward(self, root: Tensor) -> GradientMap:
        """
        Replay the tape in reverse and accumulate d(root)/d(tensor)

        Args:
            root: Scalar tensor (size 1)

        Returns:
            GradientMap over every tensor on the tape; leaves that require
            gradients also get their `grad` slot set

        Raises:
            GradientError: If root is not a scalar or the tape is empty
        """
        if root.size != 1:
            raise GradientError(f"backward needs a scalar root, got shape {root.shape}")
        if not self.records:
            raise GradientError("backward on an empty tape")

        tensors: Dict[int, Tensor] = {}
        for rec in self.records:
            for t in rec.inputs:
                tensors[id(t)] = t
            tensors[id(rec.output)] = rec.output
        tensors[id(root)] = root

        # Slots are zero until first accumulation; untouched slots stay implicit zeros.
        grads: Dict[int, np.ndarray] = {id(root): np.ones(root.shape)}

        for rec in reversed(self.records):
            out_grad = grads.get(id(rec.output))
            if out_grad is None:
                continue
            needs = tuple(t.requires_grad for t in rec.inputs)
            input_grads = rec.primitive.backward(out_grad, needs)
            for tensor, grad, need in zip(rec.inputs, input_grads, needs):
                if not need or grad is None:
                    continue
                key = id(tensor)
                if key in grads:
                    grads[key] = grads[key] + grad
                else:
                    grads[key] = np.array(grad, dtype=np.float64).reshape(tensor.shape)

        for key, tensor in tensors.items():
            if tensor.requires_grad and tensor._tape is None:
                tensor.grad = grads[key] if key in grads else np.zeros(tensor.shape)
        return GradientMap(grads, tensors)


def backward(root: Tensor, tape: Optional[Tape] = None) -> GradientMap:
    """
    Run the backward pass for root

    Uses the explicit tape if given, else the tape that recorded root, else the
    active tape (a root that is a constant yields all-zero gradients).
    """
    tape = tape or root._tape or active_tape()
    if tape is None:
        raise GradientError("backward needs a root produced under a recording tape")
    return tape.backward(root)


def as_tensor(value: Any) -> Tensor:
    """Pass tensors through, wrap anything else as a constant"""
    if isinstance(value, Tensor):
        return value
    return Tensor(value)

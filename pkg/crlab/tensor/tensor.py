"""
`Tensor` is a dense float64 array that can take part in reverse-mode
differentiation. All arithmetic goes through `apply_primitive`, which looks up
the operation in the primitive registry, validates shapes and domains,
evaluates the forward value with numpy and records the operation on the active
`~crlab.tensor.tape.Tape`.

>>> a = Tensor([[1.0, 2.0], [3.0, 4.0]])
>>> eye = Tensor([[1.0, 0.0], [0.0, 1.0]])
>>> (eye @ a).numpy().tolist()
[[1.0, 2.0], [3.0, 4.0]]
>>> round(Tensor([0.0, 0.0]).logsumexp(axis=0).item(), 6)
0.693147

New primitives are declared with the `primitive` decorator on their numpy
forward function, and given a backward rule (vector-Jacobian product) with
`Primitive.defvjp`. Backward rules are written with tensors so they can
themselves be recorded.
"""

from __future__ import annotations

from typing import (
    Any,
    Callable,
    Dict,
    Iterable,
    Optional,
    Sequence,
    Tuple,
    Union,
)

import numpy as np

from .tape import Tape, get_tape

__all__ = [
    "Tensor",
    "TensorLike",
    "Primitive",
    "primitive",
    "apply_primitive",
    "as_tensor",
    "concat",
    "stop_gradient",
    "ShapeError",
    "DomainError",
    "NonFiniteError",
]


class ShapeError(ValueError):
    """Operand shapes do not conform for the requested primitive"""

    def __init__(self, kind: str, shapes: Sequence[Tuple[int, ...]], detail=""):
        self.kind = kind
        self.shapes = tuple(tuple(s) for s in shapes)
        msg = f"{kind}: incompatible shapes {list(self.shapes)}"
        super().__init__(f"{msg} ({detail})" if detail else msg)


class DomainError(ValueError):
    """Operand values lie outside the domain of the primitive"""

    def __init__(self, kind: str, shapes: Sequence[Tuple[int, ...]], detail=""):
        self.kind = kind
        self.shapes = tuple(tuple(s) for s in shapes)
        super().__init__(f"{kind}: {detail} for shapes {list(self.shapes)}")


class NonFiniteError(FloatingPointError):
    """A forward value contains NaN or infinity"""

    def __init__(self, kind: str):
        self.kind = kind
        super().__init__(f"{kind} produced non-finite values")


Checker = Callable[..., None]
VJP = Callable[..., Tuple[Optional["Tensor"], ...]]


class Primitive:
    """A registered differentiable operation"""

    def __init__(
        self,
        kind: str,
        forward: Callable[..., np.ndarray],
        check: Optional[Checker] = None,
        differentiable: bool = True,
    ):
        self.kind = kind
        self.forward = forward
        self.check = check
        self.differentiable = differentiable
        self.vjp: Optional[VJP] = None

    def defvjp(self, fn: VJP) -> VJP:
        """Declare the backward rule, called as ``fn(g, out, *inputs, **params)``"""
        self.vjp = fn
        return fn

    def __call__(self, *inputs, **params) -> "Tensor":
        return apply_primitive(self.kind, *inputs, **params)

    def __repr__(self) -> str:
        return f"Primitive({self.kind!r})"


_PRIMITIVES: Dict[str, Primitive] = {}


def primitive(kind: str, check: Optional[Checker] = None, differentiable=True):
    """Decorator registering a numpy forward function as a primitive

    :param kind: Unique primitive name
    :param check: Validation called as ``check(kind, *arrays, **params)``
    :param differentiable: Whether outputs may carry gradients
    """

    def decorator(fn: Callable[..., np.ndarray]) -> Primitive:
        if kind in _PRIMITIVES:
            raise ValueError(f"Primitive {kind} already registered")
        prim = Primitive(kind, fn, check, differentiable)
        _PRIMITIVES[kind] = prim
        return prim

    return decorator


def get_primitive(kind: str) -> Primitive:
    try:
        return _PRIMITIVES[kind]
    except KeyError:
        raise ValueError(f"Unknown primitive {kind}") from None


TensorLike = Union["Tensor", np.ndarray, float, int, Sequence]


def as_tensor(value: TensorLike) -> "Tensor":
    return value if isinstance(value, Tensor) else Tensor(value)


def apply_primitive(kind: str, *inputs: TensorLike, **params) -> "Tensor":
    """Evaluate primitive `kind` on `inputs`.

    :raises ShapeError: Shapes do not conform
    :raises DomainError: Values outside the primitive domain
    :raises NonFiniteError: The forward value is not finite
    """
    prim = get_primitive(kind)
    tensors = tuple(as_tensor(x) for x in inputs)
    arrays = tuple(t.data for t in tensors)

    if prim.check:
        prim.check(kind, *arrays, **params)

    with np.errstate(all="ignore"):
        data = prim.forward(*arrays, **params)

    if not np.all(np.isfinite(data)):
        raise NonFiniteError(kind)

    out = Tensor(data)
    tape = get_tape()
    if (
        prim.differentiable
        and tape is not None
        and tape.recording
        and any(t.requires_grad for t in tensors)
    ):
        out.requires_grad = True
        tape.record(kind, tensors, out, params)
    return out


class Tensor:
    """Dense float64 array with optional gradient tape participation.

    :param data: Array-like values, converted to ``float64``
    :param requires_grad: Whether gradients should be computed for this tensor
    """

    __array_priority__ = 100

    def __init__(self, data: Any, requires_grad: bool = False):
        if isinstance(data, Tensor):
            data = data.data
        self.data: np.ndarray = np.ascontiguousarray(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self._tape: Optional[Tape] = None
        self._node_id: Optional[int] = None

    # Array protocol

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def node_id(self) -> Optional[int]:
        """Handle of this tensor on the active tape"""
        tape = get_tape()
        if tape is not None:
            return tape.node_id(self)
        return self._node_id

    def numpy(self) -> np.ndarray:
        return self.data.copy()

    def item(self) -> float:
        if self.size != 1:
            raise ValueError(f"item() needs a single element, not shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def __len__(self) -> int:
        return self.shape[0]

    def __repr__(self) -> str:
        body = np.array2string(self.data, precision=6, separator=", ")
        grad = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor({body}{grad})"

    # Arithmetic

    def __add__(self, other: TensorLike) -> "Tensor":
        return apply_primitive("add", self, other)

    def __radd__(self, other: TensorLike) -> "Tensor":
        return apply_primitive("add", other, self)

    def __sub__(self, other: TensorLike) -> "Tensor":
        return apply_primitive("sub", self, other)

    def __rsub__(self, other: TensorLike) -> "Tensor":
        return apply_primitive("sub", other, self)

    def __mul__(self, other: TensorLike) -> "Tensor":
        return apply_primitive("mul", self, other)

    def __rmul__(self, other: TensorLike) -> "Tensor":
        return apply_primitive("mul", other, self)

    def __truediv__(self, other: TensorLike) -> "Tensor":
        return apply_primitive("div", self, other)

    def __rtruediv__(self, other: TensorLike) -> "Tensor":
        return apply_primitive("div", other, self)

    def __neg__(self) -> "Tensor":
        return apply_primitive("mul", self, -1.0)

    def __matmul__(self, other: TensorLike) -> "Tensor":
        return apply_primitive("matmul", self, other)

    def __rmatmul__(self, other: TensorLike) -> "Tensor":
        return apply_primitive("matmul", other, self)

    def __getitem__(self, key) -> "Tensor":
        return apply_primitive("slice", self, key=key)

    # Elementwise

    def relu(self) -> "Tensor":
        return apply_primitive("relu", self)

    def leaky_relu(self, alpha: float = 0.2) -> "Tensor":
        return apply_primitive("leaky_relu", self, alpha=alpha)

    def tanh(self) -> "Tensor":
        return apply_primitive("tanh", self)

    def exp(self) -> "Tensor":
        return apply_primitive("exp", self)

    def log(self) -> "Tensor":
        return apply_primitive("log", self)

    def square(self) -> "Tensor":
        return apply_primitive("square", self)

    def abs(self) -> "Tensor":
        return apply_primitive("abs", self)

    def sqrt(self) -> "Tensor":
        return apply_primitive("sqrt", self)

    def clip(self, lo: float, hi: float) -> "Tensor":
        """Values clamped to ``[lo, hi]``, gradient zero outside the range"""
        return apply_primitive("clip", self, lo=lo, hi=hi)

    # Reductions

    def sum(self, axis=None, keepdims: bool = False) -> "Tensor":
        return apply_primitive("sum", self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims: bool = False) -> "Tensor":
        return apply_primitive("mean", self, axis=axis, keepdims=keepdims)

    def logsumexp(self, axis=None) -> "Tensor":
        return apply_primitive("logsumexp", self, axis=axis)

    def softmax(self, axis=-1) -> "Tensor":
        return apply_primitive("softmax", self, axis=axis)

    # Layout

    def reshape(self, *shape) -> "Tensor":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return apply_primitive("reshape", self, shape=tuple(shape))

    def transpose(self) -> "Tensor":
        return apply_primitive("transpose", self)

    @property
    def T(self) -> "Tensor":
        return self.transpose()

    def expand(self, shape: Tuple[int, ...]) -> "Tensor":
        """Broadcast the size-one axes of this tensor to `shape`"""
        return apply_primitive("expand", self, shape=tuple(shape))

    def detach(self) -> "Tensor":
        return stop_gradient(self)


def concat(tensors: Iterable[TensorLike], axis: int = 0) -> Tensor:
    return apply_primitive("concat", *tensors, axis=axis)


def stop_gradient(x: TensorLike) -> Tensor:
    """Same forward value as `x`, no gradient flows back through it"""
    return apply_primitive("stop_gradient", x)

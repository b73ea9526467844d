"""
Registry of the differentiable primitives.

Every entry pairs a numpy forward function with a backward rule written in
terms of other primitives. Elementwise binary primitives only broadcast over a
leading batch dimension (or against a scalar); anything else needs an explicit
`~crlab.tensor.Tensor.reshape` / `~crlab.tensor.Tensor.expand`.

>>> from crlab.tensor import Tensor
>>> Tensor([1.0, 1.0, 1.0]).softmax(axis=0).numpy().round(6).tolist()
[0.333333, 0.333333, 0.333333]
>>> (Tensor([[1.0, 2.0], [3.0, 4.0]]) + Tensor([10.0, 20.0])).numpy().tolist()
[[11.0, 22.0], [13.0, 24.0]]
"""

from typing import Sequence, Tuple

import numpy as np
from scipy import special

from .tensor import DomainError, ShapeError, Tensor, primitive

__all__ = ["DEFAULT_LEAKY_SLOPE"]

DEFAULT_LEAKY_SLOPE = 0.2


def _shapes(*arrays: np.ndarray):
    return [a.shape for a in arrays]


def _normalize_axes(axis, ndim: int) -> Tuple[int, ...]:
    if axis is None:
        return tuple(range(ndim))
    axes = axis if isinstance(axis, (tuple, list)) else (axis,)
    return tuple(sorted(a % ndim for a in axes)) if ndim else ()


def _unbroadcast(g: Tensor, shape: Tuple[int, ...]) -> Tensor:
    if g.shape == shape:
        return g
    if shape == ():
        return g.sum()
    return g.sum(axis=0)


def _expand_back(g: Tensor, shape: Tuple[int, ...], axis, keepdims: bool) -> Tensor:
    axes = _normalize_axes(axis, len(shape))
    kept = tuple(1 if i in axes else s for i, s in enumerate(shape))
    if g.shape != kept:
        g = g.reshape(kept)
    if kept == shape:
        return g
    return g.expand(shape)


def _reduced_count(shape: Tuple[int, ...], axis) -> int:
    return int(np.prod([shape[a] for a in _normalize_axes(axis, len(shape))]))


# Checks


def _batch_broadcast(kind: str, a: np.ndarray, b: np.ndarray, **_):
    sa, sb = a.shape, b.shape
    if sa == sb or sa == () or sb == () or sa == sb[1:] or sb == sa[1:]:
        return
    raise ShapeError(kind, (sa, sb), "only leading batch broadcasting is supported")


def _nonzero_divisor(kind: str, a: np.ndarray, b: np.ndarray, **_):
    _batch_broadcast(kind, a, b)
    if np.any(b == 0):
        raise DomainError(kind, _shapes(a, b), "division by zero")


def _positive(kind: str, x: np.ndarray, **_):
    if np.any(x <= 0):
        raise DomainError(kind, _shapes(x), "log of nonpositive value")


def _nonnegative(kind: str, x: np.ndarray, **_):
    if np.any(x < 0):
        raise DomainError(kind, _shapes(x), "square root of negative value")


def _matmul_shapes(kind: str, a: np.ndarray, b: np.ndarray, **_):
    ok = (a.ndim, b.ndim) in ((2, 2), (2, 1), (1, 2)) and a.shape[-1] == b.shape[0]
    if not ok:
        raise ShapeError(kind, _shapes(a, b))


def _axis_in_range(kind: str, x: np.ndarray, axis=None, **_):
    if axis is None:
        return
    for a in axis if isinstance(axis, (tuple, list)) else (axis,):
        if not -x.ndim <= a < max(x.ndim, 1):
            raise ShapeError(kind, _shapes(x), f"axis {a} out of range")


def _concat_shapes(kind: str, *arrays: np.ndarray, axis: int = 0):
    if not arrays:
        raise ShapeError(kind, [], "nothing to concatenate")
    first = arrays[0]
    ax = axis % max(first.ndim, 1)
    for a in arrays[1:]:
        if a.ndim != first.ndim or any(
            s != t for i, (s, t) in enumerate(zip(a.shape, first.shape)) if i != ax
        ):
            raise ShapeError(kind, _shapes(*arrays))


def _reshape_size(kind: str, x: np.ndarray, shape: Tuple[int, ...] = ()):
    if int(np.prod(shape)) != x.size or any(s < 0 for s in shape):
        raise ShapeError(kind, [x.shape, tuple(shape)])


def _transpose_shape(kind: str, x: np.ndarray):
    if x.ndim != 2:
        raise ShapeError(kind, [x.shape], "transpose needs a matrix")


def _expand_shape(kind: str, x: np.ndarray, shape: Tuple[int, ...] = ()):
    if x.ndim != len(shape) or any(s not in (1, t) for s, t in zip(x.shape, shape)):
        raise ShapeError(kind, [x.shape, tuple(shape)])


# Elementwise binary


@primitive("add", check=_batch_broadcast)
def add(a, b):
    return a + b


@add.defvjp
def _(g, out, a, b):
    return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)


@primitive("sub", check=_batch_broadcast)
def sub(a, b):
    return a - b


@sub.defvjp
def _(g, out, a, b):
    return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)


@primitive("mul", check=_batch_broadcast)
def mul(a, b):
    return a * b


@mul.defvjp
def _(g, out, a, b):
    return _unbroadcast(g * b, a.shape), _unbroadcast(g * a, b.shape)


@primitive("div", check=_nonzero_divisor)
def div(a, b):
    return a / b


@div.defvjp
def _(g, out, a, b):
    return _unbroadcast(g / b, a.shape), _unbroadcast(-(g * out) / b, b.shape)


@primitive("matmul", check=_matmul_shapes)
def matmul(a, b):
    return a @ b


@matmul.defvjp
def _(g, out, a, b):
    if b.ndim == 1:
        return g.reshape(g.shape[0], 1) @ b.reshape(1, b.shape[0]), a.T @ g
    if a.ndim == 1:
        return b @ g, a.reshape(a.shape[0], 1) @ g.reshape(1, g.shape[0])
    return g @ b.T, a.T @ g


# Elementwise unary


@primitive("relu")
def relu(x):
    return np.maximum(x, 0.0)


@relu.defvjp
def _(g, out, x):
    return (g * Tensor(x.data > 0),)


@primitive("leaky_relu")
def leaky_relu(x, alpha: float = DEFAULT_LEAKY_SLOPE):
    return np.where(x > 0, x, alpha * x)


@leaky_relu.defvjp
def _(g, out, x, alpha: float = DEFAULT_LEAKY_SLOPE):
    return (g * Tensor(np.where(x.data > 0, 1.0, alpha)),)


@primitive("tanh")
def tanh(x):
    return np.tanh(x)


@tanh.defvjp
def _(g, out, x):
    return (g * (1.0 - out.square()),)


@primitive("exp")
def exp(x):
    return np.exp(x)


@exp.defvjp
def _(g, out, x):
    return (g * out,)


@primitive("log", check=_positive)
def log(x):
    return np.log(x)


@log.defvjp
def _(g, out, x):
    return (g / x,)


@primitive("square")
def square(x):
    return x * x


@square.defvjp
def _(g, out, x):
    return (g * (x * 2.0),)


@primitive("abs")
def abs_(x):
    return np.abs(x)


@abs_.defvjp
def _(g, out, x):
    return (g * Tensor(np.sign(x.data)),)


@primitive("clip")
def clip(x, lo: float = -np.inf, hi: float = np.inf):
    return np.clip(x, lo, hi)


@clip.defvjp
def _(g, out, x, lo: float = -np.inf, hi: float = np.inf):
    return (g * Tensor((x.data >= lo) & (x.data <= hi)),)


@primitive("sqrt", check=_nonnegative)
def sqrt(x):
    return np.sqrt(x)


@sqrt.defvjp
def _(g, out, x):
    return (g * 0.5 / out,)


# Reductions


@primitive("sum", check=_axis_in_range)
def sum_(x, axis=None, keepdims: bool = False):
    return np.sum(x, axis=axis, keepdims=keepdims)


@sum_.defvjp
def _(g, out, x, axis=None, keepdims: bool = False):
    return (_expand_back(g, x.shape, axis, keepdims),)


@primitive("mean", check=_axis_in_range)
def mean(x, axis=None, keepdims: bool = False):
    return np.mean(x, axis=axis, keepdims=keepdims)


@mean.defvjp
def _(g, out, x, axis=None, keepdims: bool = False):
    return (_expand_back(g, x.shape, axis, keepdims) / _reduced_count(x.shape, axis),)


@primitive("logsumexp", check=_axis_in_range)
def logsumexp(x, axis=None):
    return special.logsumexp(x, axis=axis)


@logsumexp.defvjp
def _(g, out, x, axis=None):
    return (_expand_back(g, x.shape, axis, False) * x.softmax(axis=axis),)


@primitive("softmax", check=_axis_in_range)
def softmax(x, axis=-1):
    return special.softmax(x, axis=axis)


@softmax.defvjp
def _(g, out, x, axis=-1):
    gs = g * out
    inner = gs.sum(axis=axis, keepdims=True)
    if inner.shape != out.shape:
        inner = inner.expand(out.shape)
    return (gs - out * inner,)


# Layout


@primitive("concat", check=_concat_shapes)
def concat_(*arrays, axis: int = 0):
    return np.concatenate(arrays, axis=axis)


@concat_.defvjp
def _(g, out, *inputs, axis: int = 0):
    ax = axis % out.ndim
    grads = []
    start = 0
    for t in inputs:
        stop = start + t.shape[ax]
        key = (slice(None),) * ax + (slice(start, stop),)
        grads.append(g[key])
        start = stop
    return tuple(grads)


@primitive("slice")
def slice_(x, key=None):
    try:
        return np.array(x[key])
    except IndexError as err:
        raise ShapeError("slice", [x.shape], str(err)) from None


@slice_.defvjp
def _(g, out, x, key=None):
    return (scatter(g, key=key, shape=tuple(x.shape)),)


@primitive("scatter")
def scatter(g, key=None, shape: Sequence[int] = ()):
    z = np.zeros(shape)
    np.add.at(z, key, g)
    return z


@scatter.defvjp
def _(g, out, x, key=None, shape: Sequence[int] = ()):
    return (g[key],)


@primitive("transpose", check=_transpose_shape)
def transpose(x):
    return x.T


@transpose.defvjp
def _(g, out, x):
    return (g.T,)


@primitive("reshape", check=_reshape_size)
def reshape(x, shape: Tuple[int, ...] = ()):
    return x.reshape(shape)


@reshape.defvjp
def _(g, out, x, shape: Tuple[int, ...] = ()):
    return (g.reshape(x.shape),)


@primitive("expand", check=_expand_shape)
def expand(x, shape: Tuple[int, ...] = ()):
    return np.broadcast_to(x, shape).copy()


@expand.defvjp
def _(g, out, x, shape: Tuple[int, ...] = ()):
    axes = tuple(i for i, (s, t) in enumerate(zip(x.shape, shape)) if s != t)
    return (g.sum(axis=axes, keepdims=True) if axes else g,)


@primitive("stop_gradient", differentiable=False)
def stop_gradient(x):
    return x.copy()

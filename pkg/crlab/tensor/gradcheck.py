"""
Central finite differences, used to validate backward rules.

>>> import numpy as np
>>> from crlab.tensor import Tensor
>>> x = Tensor(np.array([0.5, -1.0, 2.0]))
>>> finite_diff_check(lambda t: t.square().sum(), x) < 1e-6
True
"""

from typing import Callable

import numpy as np

from .autodiff import grad
from .tape import Tape
from .tensor import NonFiniteError, Tensor, TensorLike, as_tensor

__all__ = ["finite_diff_check", "numerical_gradient", "numerical_jacobian"]

#: Absolute floor of the relative error denominator
RELATIVE_FLOOR = 1e-8


def numerical_jacobian(
    f: Callable[[Tensor], Tensor], x: TensorLike, step: float = 1e-5
) -> np.ndarray:
    """Jacobian of `f` at `x` by central differences, shape ``(out.size, x.size)``"""
    if step <= 0:
        raise ValueError("step must be positive")
    x0 = as_tensor(x).numpy()
    flat = x0.reshape(-1)
    columns = []
    for i in range(flat.size):
        plus, minus = flat.copy(), flat.copy()
        plus[i] += step
        minus[i] -= step
        fp = f(Tensor(plus.reshape(x0.shape))).numpy().reshape(-1)
        fm = f(Tensor(minus.reshape(x0.shape))).numpy().reshape(-1)
        columns.append((fp - fm) / (2 * step))
    jac = np.stack(columns, axis=1) if columns else np.zeros((1, 0))
    if not np.all(np.isfinite(jac)):
        raise NonFiniteError("finite_difference")
    return jac


def numerical_gradient(
    f: Callable[[Tensor], Tensor], x: TensorLike, step: float = 1e-5
) -> np.ndarray:
    x0 = as_tensor(x)
    return numerical_jacobian(f, x0, step).reshape(x0.shape)


def analytic_gradient(f: Callable[[Tensor], Tensor], x: TensorLike) -> np.ndarray:
    leaf = Tensor(as_tensor(x).numpy(), requires_grad=True)
    with Tape():
        out = f(leaf)
        if not out.requires_grad:
            # f does not depend on its input along any recorded path
            return np.zeros(leaf.shape)
        (g,) = grad(out, [leaf])
    return g.numpy()


def finite_diff_check(
    f: Callable[[Tensor], Tensor], x: TensorLike, step: float = 1e-5
) -> float:
    """Largest relative disagreement between the reverse-mode gradient of the
    scalar function `f` at `x` and its central-difference estimate.

    :raises NonFiniteError: `f` produced NaN or infinite values
    """
    analytic = analytic_gradient(f, x)
    numeric = numerical_gradient(f, x, step)
    err = np.abs(analytic - numeric) / (np.abs(analytic) + RELATIVE_FLOOR)
    return float(err.max()) if err.size else 0.0

from . import primitives  # noqa: F401  populates the primitive registry
from .autodiff import Gradients, backward, grad, jacobian_rows
from .gradcheck import finite_diff_check, numerical_gradient, numerical_jacobian
from .random import PrngStream, Stream, derive_seed, prng_draw
from .tape import Node, Tape, TapeError, get_tape
from .tensor import (
    DomainError,
    NonFiniteError,
    Primitive,
    ShapeError,
    Tensor,
    TensorLike,
    apply_primitive,
    as_tensor,
    concat,
    get_primitive,
    primitive,
    stop_gradient,
)

__all__ = [
    "Tensor",
    "TensorLike",
    "Tape",
    "Node",
    "get_tape",
    "Primitive",
    "primitive",
    "get_primitive",
    "apply_primitive",
    "as_tensor",
    "concat",
    "stop_gradient",
    "backward",
    "grad",
    "jacobian_rows",
    "Gradients",
    "finite_diff_check",
    "numerical_gradient",
    "numerical_jacobian",
    "PrngStream",
    "Stream",
    "prng_draw",
    "derive_seed",
    "ShapeError",
    "DomainError",
    "NonFiniteError",
    "TapeError",
]

"""
Parameter containers.

A `Module` finds its parameters by walking its attributes, so composite
networks only need to assign their parts.

>>> from crlab.tensor import PrngStream
>>> layer = Linear(3, 2, PrngStream(0))
>>> sorted(layer.state_dict())
['bias', 'weight']
>>> layer(Tensor([[1.0, 2.0, 3.0]])).shape
(1, 2)
"""

from dataclasses import dataclass
from typing import Callable, Dict, Iterator, List, Literal, Optional, Tuple

import numpy as np

from crlab.tensor import PrngStream, ShapeError, Tensor

__all__ = [
    "Parameter",
    "Module",
    "Linear",
    "MlpSpec",
    "Mlp",
    "Embedding",
    "UnknownEnvironmentError",
    "ACTIVATIONS",
]

Init = Literal["glorot", "zeros"]

ACTIVATIONS: Dict[str, Callable[[Tensor], Tensor]] = {
    "leaky_relu": Tensor.leaky_relu,
    "tanh": Tensor.tanh,
    "relu": Tensor.relu,
    "identity": lambda x: x,
}


class UnknownEnvironmentError(KeyError):
    pass


class Parameter(Tensor):
    """Tensor optimised by the trainer"""

    def __init__(self, data, requires_grad: bool = True):
        super().__init__(data, requires_grad=requires_grad)


class Module:
    """Base class of the networks, callable through `forward`"""

    #: Parameters of untrainable modules are left out of `parameters`
    trainable = True

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)

    def forward(self, *args, **kwargs):
        raise NotImplementedError

    def _children(self) -> Iterator[Tuple[str, object]]:
        for name, value in vars(self).items():
            if isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    yield f"{name}.{i}", item
            else:
                yield name, value

    def named_parameters(
        self, prefix: str = "", trainable_only: bool = False
    ) -> Iterator[Tuple[str, Parameter]]:
        if trainable_only and not self.trainable:
            return
        for name, value in self._children():
            if isinstance(value, Parameter):
                yield prefix + name, value
            elif isinstance(value, Module):
                yield from value.named_parameters(f"{prefix}{name}.", trainable_only)

    def parameters(self) -> Dict[str, Parameter]:
        """Trainable parameters by dotted name"""
        return dict(self.named_parameters(trainable_only=True))

    def state_dict(self) -> Dict[str, np.ndarray]:
        return {name: p.numpy() for name, p in self.named_parameters()}

    def load_state_dict(self, state: Dict[str, np.ndarray]):
        params = dict(self.named_parameters())
        missing = set(params) - set(state)
        if missing:
            raise KeyError(f"Missing parameters {sorted(missing)}")
        for name, p in params.items():
            value = np.asarray(state[name], dtype=float)
            if value.shape != p.shape:
                raise ShapeError("load_state_dict", [p.shape, value.shape], name)
            p.data = value.copy()

    def freeze(self) -> "Module":
        self.trainable = False
        for _, p in self.named_parameters():
            p.requires_grad = False
        return self


class Linear(Module):
    """``y = x Wᵀ + b`` with Glorot-uniform or zero initialisation"""

    def __init__(
        self,
        n_in: int,
        n_out: int,
        stream: Optional[PrngStream] = None,
        init: Init = "glorot",
    ):
        if init == "zeros" or stream is None:
            w = np.zeros((n_out, n_in))
        else:
            limit = np.sqrt(6 / (n_in + n_out))
            w = 2 * limit * stream.draw("uniform01", (n_out, n_in)).numpy() - limit
        self.weight = Parameter(w)
        self.bias = Parameter(np.zeros(n_out))

    def forward(self, x: Tensor) -> Tensor:
        return x @ self.weight.T + self.bias


@dataclass(frozen=True)
class MlpSpec:
    """
    :param widths: Input width, hidden widths, output width
    :param activation: Name in `ACTIVATIONS`, applied between layers
    :param final_init: Initialisation of the last layer
    """

    widths: Tuple[int, ...]
    activation: str = "leaky_relu"
    final_init: Init = "glorot"

    def __post_init__(self):
        object.__setattr__(self, "widths", tuple(int(w) for w in self.widths))
        if len(self.widths) < 2:
            raise ValueError("An MLP needs at least one layer")
        if any(w <= 0 for w in self.widths):
            raise ValueError(f"Widths must be positive, got {self.widths}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"Unknown activation {self.activation}")


class Mlp(Module):
    def __init__(self, spec: MlpSpec, stream: Optional[PrngStream] = None):
        self.spec = spec
        n = len(spec.widths) - 1
        self.layers: List[Linear] = [
            Linear(
                a,
                b,
                stream,
                init=spec.final_init if i == n - 1 else "glorot",
            )
            for i, (a, b) in enumerate(zip(spec.widths[:-1], spec.widths[1:]))
        ]

    def forward(self, x: Tensor) -> Tensor:
        act = ACTIVATIONS[self.spec.activation]
        for i, layer in enumerate(self.layers):
            if i:
                x = act(x)
            x = layer(x)
        return x


class Embedding(Module):
    """Learned vector per environment index"""

    def __init__(self, count: int, dim: int, stream: Optional[PrngStream] = None):
        w = np.zeros((count, dim))
        if stream is not None:
            w = 0.1 * stream.draw("standard_normal", (count, dim)).numpy()
        self.weight = Parameter(w)

    @property
    def count(self) -> int:
        return self.weight.shape[0]

    def forward(self, u) -> Tensor:
        u = np.asarray(u, dtype=int)
        if u.size and (u.min() < 0 or u.max() >= self.count):
            raise UnknownEnvironmentError(
                f"Environment index out of range for {self.count} environments"
            )
        return self.weight[(u,)]

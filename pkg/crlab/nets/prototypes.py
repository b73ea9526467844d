"""
Learnable cluster prototypes on the unit sphere.

>>> import numpy as np
>>> protos = Prototypes(3, 3, temperature=1.0)
>>> prototype_logits(protos, Tensor([[2.0, 0.0, 0.0]])).numpy().tolist()
[[1.0, 0.0, 0.0]]
"""

from typing import Optional

import numpy as np

from crlab.tensor import DomainError, PrngStream, Tensor

from .base import Module, Parameter

__all__ = ["Prototypes", "prototype_logits", "l2_normalize", "DEFAULT_TEMPERATURE"]

DEFAULT_TEMPERATURE = 0.1

#: Norms below this are treated as zero
_NORM_FLOOR = 1e-12


def l2_normalize(z: Tensor, kind: str = "l2_normalize") -> Tensor:
    """Rows of the ``(N, d)`` tensor `z` scaled to unit norm.

    :raises DomainError: A row has zero norm
    """
    if z.ndim == 1:
        z = z.reshape(1, z.shape[0])
    norms = np.sqrt((z.data**2).sum(axis=1))
    if np.any(norms < _NORM_FLOOR):
        raise DomainError(kind, [z.shape], "zero-norm representation")
    return z / z.square().sum(axis=1, keepdims=True).sqrt().expand(z.shape)


class Prototypes(Module):
    """
    ``K × d`` prototype matrix with a softmax temperature.

    Without a stream the prototypes start at the first ``K`` basis vectors
    (cycled when ``K > d``).
    """

    def __init__(
        self,
        count: int,
        dim: int,
        stream: Optional[PrngStream] = None,
        temperature: float = DEFAULT_TEMPERATURE,
    ):
        if count < 1:
            raise ValueError("At least one prototype is needed")
        if temperature <= 0:
            raise ValueError(f"Temperature must be positive, got {temperature}")
        if stream is None:
            w = np.eye(dim)[np.arange(count) % dim]
        else:
            w = stream.draw("standard_normal", (count, dim)).numpy()
        self.weight = Parameter(w)
        self.temperature = temperature
        self.renormalize()

    @property
    def count(self) -> int:
        return self.weight.shape[0]

    def renormalize(self):
        """Project the rows back on the unit sphere, after each update"""
        norms = np.linalg.norm(self.weight.data, axis=1, keepdims=True)
        self.weight.data = self.weight.data / np.maximum(norms, _NORM_FLOOR)

    def forward(self, z: Tensor) -> Tensor:
        return prototype_logits(self, z)


def prototype_logits(protos: Prototypes, z: Tensor) -> Tensor:
    """Cosine similarities ``(N, K)`` between `z` and each prototype over ``τ_p``"""
    zn = l2_normalize(z, "prototype_logits")
    cn = l2_normalize(protos.weight, "prototype_logits")
    return zn @ cn.T * (1.0 / protos.temperature)

from typing import Sequence

from crlab.tensor import PrngStream, Stream, Tensor

from .base import Mlp, MlpSpec, Module

__all__ = ["FrozenExtractor"]


class FrozenExtractor(Module):
    """
    Fixed random feature map standing in for a pretrained backbone.

    The weights are drawn from the reserved extractor stream of `seed` and are
    never trained, so the features only depend on the seed.
    """

    def __init__(
        self, n_in: int, n_out: int, seed: int, hidden: Sequence[int] = (64,)
    ):
        stream = PrngStream(seed, Stream.EXTRACTOR)
        self.net = Mlp(MlpSpec((n_in, *hidden, n_out), "tanh"), stream)
        self.freeze()

    def forward(self, x: Tensor) -> Tensor:
        return self.net(x)

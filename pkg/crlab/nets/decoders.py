from typing import List, Optional, Sequence

from crlab.tensor import PrngStream, ShapeError, Tensor, stop_gradient

from .base import Mlp, MlpSpec, Module
from .encoders import DEFAULT_HIDDEN

__all__ = ["Decoder", "AdditiveDecoder", "additive_decode"]


class Decoder(Module):
    def __init__(
        self,
        latent_dim: int,
        n_out: int,
        stream: Optional[PrngStream] = None,
        hidden: Sequence[int] = DEFAULT_HIDDEN,
        activation: str = "leaky_relu",
    ):
        self.net = Mlp(MlpSpec((latent_dim, *hidden, n_out), activation), stream)

    def forward(self, z: Tensor) -> Tensor:
        return self.net(z)


class AdditiveDecoder(Module):
    """
    Mixture ``Σ_k α_k(Z) g_k(Z_{B_k})`` of block decoders.

    The gate network reads a stop-gradient copy of ``Z``, so each branch output
    only depends on its own block through the backward pass.
    """

    def __init__(
        self,
        blocks: Sequence[Sequence[int]],
        n_out: int,
        stream: Optional[PrngStream] = None,
        hidden: Sequence[int] = DEFAULT_HIDDEN,
        activation: str = "leaky_relu",
        gate_hidden: Sequence[int] = (16,),
    ):
        self.blocks = [[int(i) for i in b] for b in blocks]
        flat = [i for b in self.blocks for i in b]
        latent_dim = len(flat)
        if len(set(flat)) != latent_dim:
            raise ShapeError("additive_decode", [], "overlapping blocks")
        if sorted(flat) != list(range(latent_dim)):
            raise ShapeError("additive_decode", [], "blocks must cover the latents")
        self.branches: List[Mlp] = [
            Mlp(MlpSpec((len(b), *hidden, n_out), activation), stream)
            for b in self.blocks
        ]
        self.gate = Mlp(
            MlpSpec((latent_dim, *gate_hidden, len(self.blocks)), activation), stream
        )

    def gates(self, z: Tensor) -> Tensor:
        return self.gate(stop_gradient(z)).softmax(axis=-1)

    def branch(self, k: int, z: Tensor) -> Tensor:
        return self.branches[k](z[:, self.blocks[k]])

    def forward(self, z: Tensor) -> Tensor:
        alpha = self.gates(z)
        B = z.shape[0]
        out = None
        for k in range(len(self.blocks)):
            g = self.branch(k, z)
            term = alpha[:, k].reshape(B, 1).expand(g.shape) * g
            out = term if out is None else out + term
        return out


def additive_decode(dec: AdditiveDecoder, z: Tensor) -> Tensor:
    return dec(z)

"""
Structural penalties on the latent space and on the networks reading it.

>>> import numpy as np
>>> round(bernoulli_kl(0.1, Tensor([0.5])).item(), 6)
0.368064
>>> mechanism_sparsity(Tensor(np.eye(3))).item()
3.0
"""

import logging
from contextlib import nullcontext
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from crlab.nets import Module, Parameter, gated_transition_inputs
from crlab.tensor import (
    PrngStream,
    ShapeError,
    Tape,
    Tensor,
    get_tape,
    jacobian_rows,
    stop_gradient,
)

from .specs import JACOBIAN_CAP, ConstraintError, ConstraintSpec

__all__ = [
    "l1_sparsity",
    "bernoulli_kl",
    "sparsity_penalties",
    "QuadraticEnergy",
    "energy_penalty",
    "Codebook",
    "vector_quantize",
    "decoder_jacobian_l1",
    "invariance_penalty",
    "EdgeWeights",
    "mechanism_sparsity",
    "gated_transition_inputs",
    "aux_latent_and_delta",
    "RHO_CLAMP",
    "ENERGY_WEIGHT_DECAY",
]

logger = logging.getLogger(__name__)

#: Estimated activations are clamped to ``[ε, 1 − ε]``
RHO_CLAMP = 1e-6
#: Weight decay of the learned energy factor
ENERGY_WEIGHT_DECAY = 1e-4


def l1_sparsity(z: Tensor) -> Tensor:
    """``‖z‖₁`` averaged over samples"""
    return z.abs().sum(axis=-1).mean()


def bernoulli_kl(rho: float, rho_hat: Tensor) -> Tensor:
    """``Σ_j KL(Bernoulli(ρ) ‖ Bernoulli(ρ̂_j))``, ρ̂ clamped into ``(0, 1)``"""
    rho_hat = rho_hat.clip(RHO_CLAMP, 1 - RHO_CLAMP)
    return (
        (rho_hat * (1 / rho)).log() * -rho
        + ((1.0 - rho_hat) * (1 / (1 - rho))).log() * -(1 - rho)
    ).sum()


def _sigmoid(x: Tensor) -> Tensor:
    return ((x * 0.5).tanh() + 1.0) * 0.5


def sparsity_penalties(
    z: Tensor, spec: ConstraintSpec, rho_hat: Optional[Tensor] = None
) -> Tensor:
    """
    ``l1_sparsity`` or ``target_sparsity`` of `spec` on latents `z`.

    The average activation ``ρ̂`` of ``target_sparsity`` is the batch mean of
    ``sigmoid(z)`` unless given.
    """
    if spec.kind == "l1_sparsity":
        return l1_sparsity(z)
    if spec.kind == "target_sparsity":
        if rho_hat is None:
            d = z.shape[-1]
            rho_hat = _sigmoid(z).reshape(z.size // d, d).mean(axis=0)
        return bernoulli_kl(spec.rho, rho_hat)
    raise ConstraintError(f"{spec.kind} is not a sparsity constraint")


class QuadraticEnergy(Module):
    """``E(z) = ½ ‖z L‖²`` with a learned lower-triangular factor ``L``"""

    def __init__(self, dim: int):
        self.factor = Parameter(np.eye(dim))
        self._mask = np.tril(np.ones((dim, dim)))

    def forward(self, z: Tensor) -> Tensor:
        factor = self.factor * Tensor(self._mask)
        return (z @ factor).square().sum(axis=-1) * 0.5


def energy_penalty(
    z: Tensor,
    spec: Optional[ConstraintSpec] = None,
    energy: Optional[QuadraticEnergy] = None,
) -> Tensor:
    """
    Mean energy of the latents, ``½‖z‖²`` by default.

    A learned `energy` adds ``ENERGY_WEIGHT_DECAY · ‖L‖²`` to keep it from
    collapsing.
    """
    if energy is None or (spec is not None and not spec.learned):
        return (z.square().sum(axis=-1) * 0.5).mean()
    return energy(z).mean() + energy.factor.square().sum() * ENERGY_WEIGHT_DECAY


class Codebook(Module):
    def __init__(self, count: int, dim: int, stream: Optional[PrngStream] = None):
        if count < 1:
            raise ConstraintError("The codebook needs at least one code")
        w = np.zeros((count, dim))
        if stream is not None:
            w = stream.draw("standard_normal", (count, dim)).numpy()
        self.weight = Parameter(w)

    def forward(
        self, z_e: Tensor, beta_commit: float = 0.25
    ) -> Tuple[Tensor, Tensor, np.ndarray]:
        return vector_quantize(z_e, self.weight, beta_commit)


def vector_quantize(
    z_e: Tensor, codebook: Tensor, beta_commit: float = 0.25
) -> Tuple[Tensor, Tensor, np.ndarray]:
    """
    Nearest-code quantisation with a straight-through gradient.

    :return: Quantised latents (gradient of identity with respect to `z_e`),
        codebook plus commitment loss, and the selected code indices
    :raises ConstraintError: The codebook is empty
    """
    if codebook.shape[0] == 0:
        raise ConstraintError("Cannot quantize with an empty codebook")
    if z_e.shape[-1] != codebook.shape[-1]:
        raise ShapeError("vector_quantize", [z_e.shape, codebook.shape])
    distances = ((z_e.data[:, None, :] - codebook.data[None]) ** 2).sum(axis=2)
    index = distances.argmin(axis=1)
    code = codebook[(index,)]
    z_q = z_e + stop_gradient(code - z_e)
    codebook_term = (stop_gradient(z_e) - code).square().sum(axis=-1).mean()
    commitment = (z_e - stop_gradient(code)).square().sum(axis=-1).mean()
    return z_q, codebook_term + commitment * beta_commit, index


def decoder_jacobian_l1(
    decoder: Callable[[Tensor], Tensor],
    z: Tensor,
    cap: int = JACOBIAN_CAP,
    rows: Optional[int] = None,
    stream: Optional[PrngStream] = None,
    create_graph: bool = True,
) -> Tensor:
    """
    ``(1/B) Σ_i ‖∂g(z_i)/∂z_i‖₁``, one reverse pass per output coordinate.

    With `rows`, only that many output coordinates drawn uniformly from
    `stream` are differentiated and the sum is rescaled, which keeps the
    estimate unbiased.

    :raises ConstraintError: The output is wider than `cap` and `rows` is unset
    """
    context = nullcontext() if get_tape() is not None else Tape()
    with context:
        if not z.requires_grad:
            z = Tensor(z.data, requires_grad=True)
        out = decoder(z)
        n = out.shape[-1]
        selected = None
        scale = 1.0
        if rows is not None and rows < n:
            if stream is None:
                raise ConstraintError("Row sampling needs a random stream")
            selected = sorted(stream.permutation(n)[:rows].tolist())
            scale = n / rows
            logger.debug("Jacobian penalty on %d of %d outputs", rows, n)
        elif n > cap:
            raise ConstraintError(
                f"Decoder output {n} exceeds the Jacobian cap {cap}, "
                "set jacobian_rows to use the row-sampled estimator"
            )
        if not out.requires_grad:
            return Tensor(0.0)
        jac = jacobian_rows(out, z, rows=selected, create_graph=create_graph)
        total = None
        for row in jac:
            term = row.abs().sum()
            total = term if total is None else total + term
        return total * (scale / z.shape[0])


def invariance_penalty(
    z1: Tensor,
    z2: Tensor,
    subset: Sequence[int],
    statistic: str = "identity",
) -> Tensor:
    """
    Discrepancy between two views on the invariant coordinates `subset`.

    ``identity`` is the mean squared difference of the coordinates,
    ``moments`` the mean squared difference of their batch mean and variance.

    :raises IndexError: A coordinate of `subset` is out of range
    """
    subset = [int(i) for i in subset]
    if z1.shape != z2.shape:
        raise ShapeError("invariance_penalty", [z1.shape, z2.shape])
    d = z1.shape[-1]
    if any(i < 0 or i >= d for i in subset):
        raise IndexError(f"Invariant coordinates {subset} out of range for {d}")
    if not subset:
        return Tensor(0.0)
    a, b = z1[:, subset], z2[:, subset]
    if statistic == "identity":
        return (a - b).square().mean()
    if statistic == "moments":
        mean_a, mean_b = a.mean(axis=0), b.mean(axis=0)
        var_a = (a - mean_a).square().mean(axis=0)
        var_b = (b - mean_b).square().mean(axis=0)
        return ((mean_a - mean_b).square() + (var_a - var_b).square()).mean()
    raise ConstraintError(f"Unknown invariance statistic {statistic}")


class EdgeWeights(Module):
    """Learnable ``(L·D) × D`` gate on the transition inputs, started at one"""

    def __init__(self, latent_dim: int, lag: int = 1):
        self.weight = Parameter(np.ones((lag * latent_dim, latent_dim)))

    def forward(self) -> Tensor:
        return self.weight


def mechanism_sparsity(edge_weights: Tensor) -> Tensor:
    """Entrywise ``‖Ê‖₁``"""
    return edge_weights.abs().sum()


def aux_latent_and_delta(h: Tensor, h_hat: Tensor) -> Tuple[Tensor, Tensor]:
    """
    Feature reconstruction and temporal-difference matching of ``(B, T, n)``
    sequences.

    :raises ConstraintError: Fewer than two steps
    """
    if h.shape != h_hat.shape:
        raise ShapeError("aux_latent_and_delta", [h.shape, h_hat.shape])
    if h.ndim != 3 or h.shape[1] < 2:
        raise ConstraintError("Temporal difference matching needs at least 2 steps")
    latent = (h_hat - h).square().sum(axis=-1).mean()
    delta = (h_hat[:, 1:] - h_hat[:, :-1]) - (h[:, 1:] - h[:, :-1])
    return latent, delta.square().sum(axis=-1).mean()

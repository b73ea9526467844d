"""
Conditional affine flows with closed-form log-determinants.

`ComponentwiseFlow` maps each latent ``z_{t,i}`` to the residual
``r_{t,i} = (z_{t,i} - m_i) · exp(-a_i)``, where ``m`` and ``a`` are produced
by a conditioner network reading the previous ``L`` steps (and an environment
embedding). The Jacobian is diagonal so ``log|det J| = -Σ_i a_i``.

`DomainFlow` maps style latents to ``z · exp(s_u) + b_u`` with a per-domain
scale and shift, ``log|det J| = Σ_i s_{u,i}``.

Both start at the identity:

>>> import numpy as np
>>> flow = ComponentwiseFlow(2, lag=1)
>>> z = Tensor(np.random.default_rng(0).normal(size=(1, 4, 2)))
>>> r, logdet = temporal_flow_forward(flow, z)
>>> bool(np.array_equal(r.numpy(), z.numpy()[:, 1:])), logdet.numpy().tolist()
(True, [0.0])
"""

from typing import List, Optional, Sequence, Tuple

import numpy as np

from crlab.tensor import PrngStream, ShapeError, Tensor, concat

from .base import Embedding, Linear, Mlp, MlpSpec, Module, UnknownEnvironmentError
from .encoders import history_window

__all__ = [
    "ComponentwiseFlow",
    "DomainFlow",
    "temporal_flow_forward",
    "domain_flow_forward",
    "gated_transition_inputs",
    "EMBED_DIM",
]

#: Width of the learned environment embeddings
EMBED_DIM = 8


def _as_indices(u, n: int) -> np.ndarray:
    u = np.asarray(u, dtype=int)
    return np.full(n, int(u)) if u.ndim == 0 else u


def gated_transition_inputs(
    edge_weights: Optional[Tensor], history: Tensor, latent_dim: int
) -> List[Tensor]:
    """Transition inputs seen by each latent dimension: column ``i`` of the
    ``(L·D) × D`` edge-weight matrix multiplies the inputs of dimension ``i``."""
    if edge_weights is None:
        return [history] * latent_dim
    if edge_weights.shape != (history.shape[1], latent_dim):
        raise ShapeError(
            "gated_transition_inputs", [edge_weights.shape, history.shape]
        )
    return [history * edge_weights[:, i] for i in range(latent_dim)]


class ComponentwiseFlow(Module):
    def __init__(
        self,
        latent_dim: int,
        lag: int,
        stream: Optional[PrngStream] = None,
        env_count: Optional[int] = None,
        hidden: Sequence[int] = (32,),
        activation: str = "leaky_relu",
        embed_dim: int = EMBED_DIM,
    ):
        if lag < 1:
            raise ValueError("The flow needs a lag of at least 1")
        self.latent_dim = latent_dim
        self.lag = lag
        self.embed = Embedding(env_count, embed_dim, stream) if env_count else None
        n_in = lag * latent_dim + latent_dim + (embed_dim if env_count else 0)
        self.net = Mlp(
            MlpSpec((n_in, *hidden, 2), activation, final_init="zeros"), stream
        )

    def conditioner(
        self,
        history: Tensor,
        u=None,
        edge_weights: Optional[Tensor] = None,
    ) -> Tuple[Tensor, Tensor]:
        """Shift ``m`` and log-scale ``a``, both ``(N, D)``, from ``(N, L·D)``
        flattened histories ordered oldest first."""
        N, D = history.shape[0], self.latent_dim
        inputs = gated_transition_inputs(edge_weights, history, D)
        emb = None
        if self.embed is not None:
            if u is None:
                raise UnknownEnvironmentError("The flow is conditioned on environments")
            emb = self.embed(_as_indices(u, N))
        rows = []
        for i in range(D):
            onehot = np.zeros((N, D))
            onehot[:, i] = 1.0
            parts = [inputs[i], Tensor(onehot)] + ([emb] if emb is not None else [])
            rows.append(concat(parts, axis=1))
        out = self.net(concat(rows, axis=0))
        m = out[:, 0].reshape(D, N).T
        a = out[:, 1].reshape(D, N).T
        return m, a

    def forward(
        self, z: Tensor, u=None, edge_weights: Optional[Tensor] = None
    ) -> Tuple[Tensor, Tensor]:
        B, T, D = z.shape
        L = self.lag
        if T <= L:
            raise ShapeError("temporal_flow", [z.shape], f"needs more than {L} steps")
        steps = T - L
        history = history_window(z, L)[:, L:, : L * D].reshape(B * steps, L * D)
        current = z[:, L:].reshape(B * steps, D)
        uu = None if u is None else np.repeat(_as_indices(u, B), steps)
        m, a = self.conditioner(history, uu, edge_weights)
        r = (current - m) * (-a).exp()
        logdet = (-a).sum(axis=1).reshape(B, steps).sum(axis=1)
        return r.reshape(B, steps, D), logdet

    def inverse(
        self,
        r: Tensor,
        initial: Tensor,
        u=None,
        edge_weights: Optional[Tensor] = None,
    ) -> Tensor:
        """Rebuild ``(B, L + T', D)`` latents from residuals ``(B, T', D)`` and
        the first ``L`` steps."""
        B, steps, D = r.shape
        L = self.lag
        z = [initial.numpy()[:, k] for k in range(L)]
        residuals = r.numpy()
        for t in range(steps):
            history = Tensor(np.concatenate(z[-L:], axis=1))
            m, a = self.conditioner(history, u, edge_weights)
            z.append(residuals[:, t] * np.exp(a.numpy()) + m.numpy())
        return Tensor(np.stack(z, axis=1))


def temporal_flow_forward(
    flow: ComponentwiseFlow, z: Tensor, u=None, edge_weights: Optional[Tensor] = None
) -> Tuple[Tensor, Tensor]:
    """Residuals ``r_{L+1:T}`` and per-sequence log-determinant"""
    return flow(z, u, edge_weights)


class DomainFlow(Module):
    def __init__(
        self,
        style_dim: int,
        env_count: int,
        stream: Optional[PrngStream] = None,
        embed_dim: int = EMBED_DIM,
    ):
        self.embed = Embedding(env_count, embed_dim, stream)
        self.log_scale = Linear(embed_dim, style_dim, init="zeros")
        self.shift = Linear(embed_dim, style_dim, init="zeros")

    def _affine(self, u, n: int) -> Tuple[Tensor, Tensor]:
        e = self.embed(_as_indices(u, n))
        return self.log_scale(e), self.shift(e)

    def forward(self, z_s: Tensor, u) -> Tuple[Tensor, Tensor]:
        log_scale, shift = self._affine(u, z_s.shape[0])
        return z_s * log_scale.exp() + shift, log_scale.sum(axis=1)

    def inverse(self, z_t: Tensor, u) -> Tensor:
        log_scale, shift = self._affine(u, z_t.shape[0])
        return (z_t - shift) * (-log_scale).exp()


def domain_flow_forward(flow: DomainFlow, z_s: Tensor, u) -> Tuple[Tensor, Tensor]:
    return flow(z_s, u)

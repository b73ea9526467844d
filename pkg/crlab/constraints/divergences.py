"""
KL-type constraints between the posterior and a prior.

>>> import numpy as np
>>> mu, logvar = Tensor([[1.0]]), Tensor([[0.0]])
>>> kl_standard_gaussian(mu, logvar).item()
0.5
>>> capacity_kl(Tensor(7.0), step=50, beta=2.0, c_max=10.0, t_stop=100).item()
4.0
"""

import math
from typing import Optional, Tuple

import numpy as np

from crlab.nets import ComponentwiseFlow, Embedding, Module, UnknownEnvironmentError
from crlab.tensor import ShapeError, Tensor

from .specs import ConstraintError

__all__ = [
    "kl_standard_gaussian",
    "capacity",
    "capacity_kl",
    "ConditionalPrior",
    "cond_prior_static_kl",
    "style_gaussian",
    "temporal_prior_terms",
    "temporal_prior_kl",
    "LOG_2PI",
]

LOG_2PI = math.log(2 * math.pi)


def _per_sample(values: Tensor) -> Tensor:
    """Sum over the last axis, mean over the others"""
    return values.sum(axis=-1).mean()


def kl_standard_gaussian(mu: Tensor, logvar: Tensor) -> Tensor:
    """``KL(N(μ, σ²) ‖ N(0, I))`` summed over latents, averaged over samples"""
    if mu.shape != logvar.shape:
        raise ShapeError("kl_standard_gaussian", [mu.shape, logvar.shape])
    return _per_sample((mu.square() + logvar.exp() - logvar - 1.0) * 0.5)


def capacity(step: int, c_max: float, t_stop: int) -> float:
    """Linear capacity schedule ``min(C_max, t / T_stop · C_max)``"""
    if t_stop <= 0:
        raise ConstraintError("The capacity schedule needs t_stop > 0")
    if step < 0:
        raise ConstraintError(f"Negative step {step}")
    return min(c_max, step / t_stop * c_max)


def capacity_kl(
    kl_value: Tensor, step: int, beta: float, c_max: float, t_stop: int
) -> Tensor:
    """``β · |KL − C(t)|``"""
    return (kl_value - capacity(step, c_max, t_stop)).abs() * beta


class ConditionalPrior(Module):
    """Diagonal Gaussian prior ``p(z | u)`` with learned per-environment
    means and log-variances, starting at ``N(0, I)``."""

    def __init__(self, env_count: int, latent_dim: int):
        self.mean = Embedding(env_count, latent_dim)
        self.logvar = Embedding(env_count, latent_dim)

    def forward(self, u) -> Tuple[Tensor, Tensor]:
        return self.mean(u), self.logvar(u)


def cond_prior_static_kl(
    mu: Tensor, logvar: Tensor, u, prior: ConditionalPrior
) -> Tensor:
    """
    ``KL(q(z|x) ‖ p(z|u))`` between diagonal Gaussians.

    :raises UnknownEnvironmentError: An environment index has no prior
    """
    u = np.asarray(u, dtype=int).reshape(-1)
    if u.shape[0] != mu.shape[0]:
        raise UnknownEnvironmentError("One environment index per sample is needed")
    p_mu, p_logvar = prior(u)
    ratio = (logvar - p_logvar).exp()
    gap = (mu - p_mu).square() * (-p_logvar).exp()
    return _per_sample((p_logvar - logvar + ratio + gap - 1.0) * 0.5)


def style_gaussian(z: Tensor) -> Tensor:
    """Negative standard-normal log density of the transformed style code"""
    s = z.shape[-1]
    return _per_sample(z.square() * 0.5) + 0.5 * s * LOG_2PI


def _gaussian_log_ratio(z: Tensor, mu: Tensor, logvar: Tensor) -> Tensor:
    """``log N(z; μ, σ²)`` without its ``log 2π`` term, per sequence"""
    B = z.shape[0]
    terms = ((z - mu).square() * (-logvar).exp() + logvar) * -0.5
    return terms.reshape(B, terms.size // B).sum(axis=1)


def temporal_prior_terms(
    mu: Tensor,
    logvar: Tensor,
    z: Tensor,
    flow: ComponentwiseFlow,
    u=None,
    edge_weights: Optional[Tensor] = None,
) -> Tuple[Tensor, Tensor]:
    """
    Initial-steps KL and transition KL of a sequential posterior.

    The first ``L`` steps are compared with ``N(0, I)`` in closed form. The
    remaining steps use a single-sample estimate of ``log q − log p`` where
    ``p`` is the flow prior ``Σ log N(r; 0, I) + log|det J|``, averaged over
    the ``T − L`` transition steps.

    :param mu: Posterior means ``(B, T, D)``
    :param logvar: Posterior log-variances ``(B, T, D)``
    :param z: Reparameterised samples ``(B, T, D)``
    :raises ConstraintError: The sequences are not longer than the lag
    """
    B, T, D = z.shape
    L = flow.lag
    if T <= L:
        raise ConstraintError(f"Sequences of {T} steps are too short for lag {L}")
    if not (mu.shape == logvar.shape == z.shape):
        raise ShapeError("temporal_prior_kl", [mu.shape, logvar.shape, z.shape])
    init = (
        (mu[:, :L].square() + logvar[:, :L].exp() - logvar[:, :L] - 1.0) * 0.5
    ).reshape(B, L * D).sum(axis=1).mean()
    r, logdet = flow(z, u, edge_weights)
    log_q = _gaussian_log_ratio(z[:, L:], mu[:, L:], logvar[:, L:])
    log_p = r.square().reshape(B, (T - L) * D).sum(axis=1) * -0.5 + logdet
    future = (log_q - log_p).mean() * (1.0 / (T - L))
    return init, future


def temporal_prior_kl(
    mu: Tensor,
    logvar: Tensor,
    z: Tensor,
    flow: ComponentwiseFlow,
    beta_init: float = 1.0,
    gamma_future: float = 1.0,
    u=None,
    edge_weights: Optional[Tensor] = None,
) -> Tensor:
    """``β_init · L_init + γ_future · L_future``, see `temporal_prior_terms`"""
    init, future = temporal_prior_terms(mu, logvar, z, flow, u, edge_weights)
    return init * beta_init + future * gamma_future

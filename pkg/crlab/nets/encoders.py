"""
Gaussian posterior encoders and history windows.

>>> import numpy as np
>>> z = Tensor(np.arange(6.0).reshape(1, 3, 2))
>>> history_window(z, 2).numpy()[0, 0].tolist()
[0.0, 0.0, 0.0, 0.0, 0.0, 1.0]
"""

from typing import Optional, Sequence, Tuple

import numpy as np

from crlab.tensor import PrngStream, ShapeError, Tensor, concat

from .base import Linear, Mlp, MlpSpec, Module

__all__ = [
    "GaussianEncoder",
    "encode",
    "reparameterize",
    "history_window",
    "LOGVAR_BOUNDS",
    "DEFAULT_HIDDEN",
]

LOGVAR_BOUNDS = (-10.0, 10.0)
DEFAULT_HIDDEN = (64, 64)


class GaussianEncoder(Module):
    """Trunk MLP followed by mean and log-variance heads"""

    def __init__(
        self,
        n_in: int,
        latent_dim: int,
        stream: Optional[PrngStream] = None,
        hidden: Sequence[int] = DEFAULT_HIDDEN,
        activation: str = "leaky_relu",
    ):
        self.latent_dim = latent_dim
        widths = (n_in, *hidden)
        self.trunk = Mlp(MlpSpec(widths, activation), stream) if hidden else None
        self.activation = activation
        width = widths[-1]
        self.mean = Linear(width, latent_dim, stream)
        self.logvar = Linear(width, latent_dim, stream)

    def forward(self, x: Tensor) -> Tuple[Tensor, Tensor]:
        h = x
        if self.trunk is not None:
            h = self.trunk(x)
            h = h.tanh() if self.activation == "tanh" else h.leaky_relu()
        return self.mean(h), self.logvar(h).clip(*LOGVAR_BOUNDS)


def encode(enc: GaussianEncoder, x: Tensor) -> Tuple[Tensor, Tensor]:
    """Posterior mean and clamped log-variance of `x`"""
    return enc(x)


def reparameterize(mu: Tensor, logvar: Tensor, noise: Tensor) -> Tensor:
    """``z = μ + noise ⊙ exp(½ log σ²)``"""
    if not (mu.shape == logvar.shape == noise.shape):
        raise ShapeError("reparameterize", [mu.shape, logvar.shape, noise.shape])
    return mu + noise * (logvar * 0.5).exp()


def history_window(z: Tensor, L: int) -> Tensor:
    """Stack ``[z_{t-L}, ..., z_t]`` for every step of ``(B, T, D)`` sequences,
    missing history padded with zeros. Output is ``(B, T, (L + 1) · D)``."""
    if L < 1:
        raise ValueError("History length must be at least 1")
    squeeze = z.ndim == 2
    if squeeze:
        z = z.reshape(1, *z.shape)
    B, T, D = z.shape
    padded = concat([Tensor(np.zeros((B, L, D))), z], axis=1)
    window = concat([padded[:, k : k + T] for k in range(L + 1)], axis=2)
    return window.reshape(T, (L + 1) * D) if squeeze else window

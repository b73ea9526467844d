"""
Adam over named parameters.

>>> import numpy as np
>>> from crlab.nets import Parameter
>>> p = Parameter(np.zeros(()))
>>> opt = Adam({"p": p})
>>> opt.step({"p": np.ones(())})
>>> round(float(p.data) * 1e3, 6)
-1.0
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional

import numpy as np

from crlab.nets import Parameter

__all__ = ["Adam", "AdamState", "adam_step", "DivergenceError"]

logger = logging.getLogger(__name__)


class DivergenceError(FloatingPointError):
    """A loss term or its gradient stopped being finite"""

    def __init__(self, term: str, step: Optional[int] = None, detail: str = ""):
        self.term = term
        self.step = step
        where = f" at step {step}" if step is not None else ""
        msg = f"Loss term '{term}' diverged{where}"
        super().__init__(f"{msg}: {detail}" if detail else msg)


@dataclass
class AdamState:
    """
    :param t: Number of updates applied so far
    :param m: First moment estimate of each parameter
    :param v: Second moment estimate of each parameter
    """

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if self.lr <= 0 or self.eps <= 0:
            raise ValueError("Learning rate and epsilon must be positive")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError(f"Betas must lie in [0, 1), got {self.beta1, self.beta2}")


def adam_step(
    state: AdamState,
    params: Mapping[str, np.ndarray],
    grads: Mapping[str, np.ndarray],
) -> Dict[str, np.ndarray]:
    """
    One bias-corrected Adam update.

    The moments of `state` are advanced in place, the updated parameters are
    returned as new arrays.

    :raises ValueError: A gradient is missing or its shape differs
    """
    state.t += 1
    t = state.t
    out = {}
    for name, value in params.items():
        if name not in grads:
            raise ValueError(f"No gradient for parameter {name}")
        g = np.asarray(grads[name], dtype=float)
        if g.shape != np.shape(value):
            raise ValueError(
                f"Gradient of {name} has shape {g.shape}, expected {np.shape(value)}"
            )
        m = state.m.get(name, np.zeros_like(g))
        v = state.v.get(name, np.zeros_like(g))
        m = state.beta1 * m + (1 - state.beta1) * g
        v = state.beta2 * v + (1 - state.beta2) * g * g
        state.m[name], state.v[name] = m, v
        m_hat = m / (1 - state.beta1**t)
        v_hat = v / (1 - state.beta2**t)
        out[name] = value - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return out


class Adam:
    """Adam bound to the parameters of a module, updated in place"""

    def __init__(
        self,
        params: Mapping[str, Parameter],
        lr: float = 1e-3,
        betas=(0.9, 0.999),
        eps: float = 1e-8,
    ):
        self.params = dict(params)
        self.state = AdamState(lr, betas[0], betas[1], eps)

    def step(self, grads: Mapping[str, np.ndarray]):
        values = {name: p.data for name, p in self.params.items()}
        for name, value in adam_step(self.state, values, grads).items():
            self.params[name].data = value

    def state_arrays(self) -> Dict[str, np.ndarray]:
        """Moments as ``adam.m.<name>`` and ``adam.v.<name>`` arrays"""
        arrays = {}
        for name in self.params:
            if name in self.state.m:
                arrays[f"adam.m.{name}"] = self.state.m[name]
                arrays[f"adam.v.{name}"] = self.state.v[name]
        return arrays

    def load_state_arrays(self, arrays: Mapping[str, np.ndarray], t: int):
        self.state.t = int(t)
        self.state.m = {}
        self.state.v = {}
        for name in self.params:
            key = f"adam.m.{name}"
            if key in arrays:
                self.state.m[name] = np.array(arrays[key])
                self.state.v[name] = np.array(arrays[f"adam.v.{name}"])
        logger.debug("Restored Adam moments of %d parameters", len(self.state.m))

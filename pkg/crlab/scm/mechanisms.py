"""
Structural mechanisms, noise, mixing functions, environments and
interventions of the synthetic data-generating processes.

A variable is produced as ``z_j = w_e[j] · m_j(inputs) + s_e[j] · ε_j`` where
``w_e`` and ``s_e`` are the mechanism-weight and noise-scale modulations of
environment ``e``. Mechanisms read a flat input vector: the current latent
vector for static models, and ``[z_{t-1}, ..., z_{t-L}, z_t]`` for temporal
ones.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Literal, Optional, Sequence, Tuple

import numpy as np

from crlab.tensor import PrngStream

from .graphs import DagError, DagSpec, sample_dag

__all__ = [
    "NoiseSpec",
    "MechanismSpec",
    "ScmSpec",
    "TemporalScmSpec",
    "MixingSpec",
    "EnvironmentSpec",
    "InterventionSpec",
    "sample_mechanisms",
    "sample_scm",
    "sample_temporal_scm",
    "sample_environments",
    "sample_noise",
]

logger = logging.getLogger(__name__)

MechanismKind = Literal["linear", "mlp"]
NoiseFamily = Literal["gaussian", "laplace"]

#: Hidden width of the MLP mechanisms
MLP_WIDTH = 16
#: Largest condition number accepted for a square mixing layer
MAX_CONDITION = 1e3
#: Range of the magnitude of linear mechanism weights
WEIGHT_RANGE = (0.5, 1.5)


@dataclass(frozen=True)
class NoiseSpec:
    """Additive exogenous noise, ``gaussian`` with std `scale` or
    ``laplace`` with diversity `scale`."""

    family: NoiseFamily = "gaussian"
    scale: float = 1.0

    def __post_init__(self):
        if self.family not in ("gaussian", "laplace"):
            raise ValueError(f"Unknown noise family {self.family}")
        if self.scale < 0:
            raise ValueError("Noise scale must be nonnegative")


def sample_noise(
    noise: Sequence[NoiseSpec], shape: Tuple[int, ...], stream: PrngStream
) -> np.ndarray:
    """Independent noise, last axis indexing the variables"""
    with stream.generator() as gen:
        eps = np.empty(shape)
        for j, spec in enumerate(noise):
            if spec.family == "gaussian":
                eps[..., j] = spec.scale * gen.standard_normal(shape[:-1])
            else:
                eps[..., j] = gen.laplace(0.0, spec.scale, shape[:-1])
    return eps


@dataclass
class MechanismSpec:
    """
    :param kinds: ``linear`` or ``mlp`` per variable
    :param weights: ``n_inputs × D`` matrix, column ``j`` holds the parent
        weights of variable ``j``; a zero entry means no edge
    :param noise: Noise of each variable
    :param hidden: For ``mlp`` variables, ``(W1, b1, w2)`` acting on the
        parent inputs only
    """

    kinds: List[MechanismKind]
    weights: np.ndarray
    noise: List[NoiseSpec]
    hidden: List[Optional[Tuple[np.ndarray, np.ndarray, np.ndarray]]] = field(
        default_factory=list
    )

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        d = self.d
        if len(self.kinds) != d or len(self.noise) != d:
            raise DagError("kinds, noise and weight columns must agree in size")
        if not self.hidden:
            self.hidden = [None] * d
        for j, kind in enumerate(self.kinds):
            if kind == "mlp" and self.hidden[j] is None and self.parents(j).size:
                raise DagError(f"MLP mechanism {j} has no hidden parameters")

    @property
    def d(self) -> int:
        return self.weights.shape[1]

    @property
    def n_inputs(self) -> int:
        return self.weights.shape[0]

    def parents(self, j: int) -> np.ndarray:
        return np.flatnonzero(self.weights[:, j])

    @classmethod
    def linear(
        cls, weights: np.ndarray, noise: Optional[Sequence[NoiseSpec]] = None
    ) -> "MechanismSpec":
        weights = np.asarray(weights, dtype=float)
        d = weights.shape[1]
        return cls(["linear"] * d, weights, list(noise or [NoiseSpec()] * d))

    def evaluate(self, j: int, inputs: np.ndarray) -> np.ndarray:
        """Deterministic part of variable `j` for a batch of flat inputs"""
        pa = self.parents(j)
        if pa.size == 0:
            return np.zeros(inputs.shape[0])
        if self.kinds[j] == "linear":
            return inputs[:, pa] @ self.weights[pa, j]
        W1, b1, w2 = self.hidden[j]  # type: ignore[misc]
        return np.tanh(inputs[:, pa] @ W1.T + b1) @ w2

    def to_dict(self) -> dict:
        return {
            "kinds": list(self.kinds),
            "weights": self.weights.tolist(),
            "noise": [[n.family, n.scale] for n in self.noise],
            "hidden": [
                None if h is None else [a.tolist() for a in h] for h in self.hidden
            ],
        }


def _signed_weights(shape, stream: PrngStream) -> np.ndarray:
    with stream.generator() as gen:
        magnitude = gen.uniform(*WEIGHT_RANGE, size=shape)
        sign = gen.choice([-1.0, 1.0], size=shape)
    return magnitude * sign


def sample_mechanisms(
    mask: np.ndarray,
    kind: Literal["linear", "mlp", "mixed"],
    noise: NoiseSpec,
    stream: PrngStream,
) -> MechanismSpec:
    """Random mechanisms on the boolean ``n_inputs × D`` parent `mask`"""
    mask = np.asarray(mask, dtype=bool)
    n_inputs, d = mask.shape
    weights = _signed_weights(mask.shape, stream) * mask
    if kind == "mixed":
        kinds = ["linear" if k else "mlp" for k in stream.integers(0, 2, size=d)]
    else:
        kinds = [kind] * d
    hidden: List[Optional[Tuple[np.ndarray, np.ndarray, np.ndarray]]] = []
    for j in range(d):
        pa = np.flatnonzero(mask[:, j])
        if kinds[j] != "mlp" or pa.size == 0:
            hidden.append(None)
            continue
        with stream.generator() as gen:
            W1 = gen.standard_normal((MLP_WIDTH, pa.size)) * 2 / np.sqrt(pa.size)
            b1 = 0.1 * gen.standard_normal(MLP_WIDTH)
            w2 = gen.standard_normal(MLP_WIDTH) / np.sqrt(MLP_WIDTH) * 2
        hidden.append((W1, b1, w2))
    return MechanismSpec(kinds, weights, [noise] * d, hidden)


@dataclass
class ScmSpec:
    """Static structural causal model"""

    dag: DagSpec
    mechanisms: MechanismSpec

    def __post_init__(self):
        if self.mechanisms.weights.shape != (self.dag.d, self.dag.d):
            raise DagError("Mechanism weights must be D×D for a static model")
        if np.any((self.mechanisms.weights != 0) & ~self.dag.edges):
            raise DagError("Mechanism weights outside the DAG edges")

    @property
    def d(self) -> int:
        return self.dag.d

    def to_dict(self) -> dict:
        return {"dag": self.dag.to_dict(), "mechanisms": self.mechanisms.to_dict()}


def sample_scm(
    d: int,
    p_edge: float,
    stream: PrngStream,
    kind: Literal["linear", "mlp", "mixed"] = "linear",
    noise: NoiseSpec = NoiseSpec(),
) -> ScmSpec:
    dag = sample_dag(d, p_edge, stream)
    return ScmSpec(dag, sample_mechanisms(dag.edges, kind, noise, stream))


@dataclass
class TemporalScmSpec:
    """
    :param base: Instantaneous graph
    :param delayed: ``L`` boolean matrices, ``delayed[l][i, j]`` when
        ``z_{t-l-1, i}`` is a parent of ``z_{t, j}``
    :param mechanisms: Mechanisms over ``(L + 1) · D`` inputs ordered
        ``[z_{t-1}, ..., z_{t-L}, z_t]``
    """

    base: DagSpec
    delayed: List[np.ndarray]
    mechanisms: MechanismSpec
    instantaneous_enabled: bool = True

    def __post_init__(self):
        if not self.delayed:
            raise DagError("A temporal model needs at least one lag")
        d = self.base.d
        self.delayed = [np.asarray(m, dtype=bool) for m in self.delayed]
        if any(m.shape != (d, d) for m in self.delayed):
            raise DagError("Delayed masks must be D×D")
        if self.mechanisms.weights.shape != ((self.lag + 1) * d, d):
            raise DagError("Mechanism weights must be (L+1)·D × D")
        if np.any((self.mechanisms.weights != 0) & ~self.mask):
            raise DagError("Mechanism weights outside the temporal graph")

    @property
    def lag(self) -> int:
        return len(self.delayed)

    @property
    def d(self) -> int:
        return self.base.d

    @property
    def mask(self) -> np.ndarray:
        return np.concatenate([*self.delayed, self.base.edges], axis=0)

    def to_dict(self) -> dict:
        return {
            "base": self.base.to_dict(),
            "delayed": [m.astype(int).tolist() for m in self.delayed],
            "mechanisms": self.mechanisms.to_dict(),
            "instantaneous_enabled": self.instantaneous_enabled,
        }


def sample_temporal_scm(
    d: int,
    lag: int,
    stream: PrngStream,
    p_instantaneous: float = 0.3,
    p_delayed: float = 0.5,
    instantaneous: bool = True,
    kind: Literal["linear", "mlp", "mixed"] = "linear",
    noise: NoiseSpec = NoiseSpec(),
    self_loops: bool = True,
) -> TemporalScmSpec:
    """Random temporal model. Delayed weights are shrunk until the linearised
    dynamics have spectral radius at most `MAX_SPECTRAL_RADIUS`."""
    base = sample_dag(d, p_instantaneous if instantaneous else 0.0, stream)
    delayed = []
    for _ in range(lag):
        m = stream.draw("uniform01", (d, d)).numpy() < p_delayed
        if self_loops:
            np.fill_diagonal(m, True)
        delayed.append(m)
    mask = np.concatenate([*delayed, base.edges])
    mechanisms = sample_mechanisms(mask, kind, noise, stream)
    spec = TemporalScmSpec(base, delayed, mechanisms, instantaneous)
    while spectral_radius(spec) > MAX_SPECTRAL_RADIUS:
        spec.mechanisms.weights[: lag * d] *= 0.9
    return spec


#: Stability bound on the linear part of sampled temporal dynamics
MAX_SPECTRAL_RADIUS = 0.9


def spectral_radius(spec: TemporalScmSpec) -> float:
    """Spectral radius of the companion matrix of the linear dynamics
    ``z_t = Bᵀ z_t + Σ_l A_lᵀ z_{t-l} + ε_t``."""
    d, L = spec.d, spec.lag
    w = spec.mechanisms.weights
    reduce = np.linalg.inv(np.eye(d) - w[L * d :].T)
    companion = np.zeros((L * d, L * d))
    for lag in range(L):
        companion[:d, lag * d : (lag + 1) * d] = reduce @ w[lag * d : (lag + 1) * d].T
    companion[d:, :-d] = np.eye((L - 1) * d)
    return float(np.max(np.abs(np.linalg.eigvals(companion))))


def _conditioned_square(d: int, stream: PrngStream, init: str) -> np.ndarray:
    for _ in range(100):
        with stream.generator() as gen:
            if init == "orthogonal":
                q, r = np.linalg.qr(gen.standard_normal((d, d)))
                q = q * np.sign(np.diag(r))
                w = q * gen.uniform(0.5, 2.0, size=d)
            else:
                w = gen.standard_normal((d, d)) / np.sqrt(d)
        cond = np.linalg.cond(w)
        if cond <= MAX_CONDITION:
            return w
        logger.warning(
            "Mixing layer condition number %.3g above %g, regenerating",
            cond,
            MAX_CONDITION,
        )
    raise DagError("Could not draw a well-conditioned mixing layer")


@dataclass
class MixingSpec:
    """Injective mixing ``x = g(z)``: square layers with leaky ReLU in
    between, then an optional full column rank lift to ``n`` dimensions."""

    layers: List[np.ndarray]
    lift: Optional[np.ndarray] = None
    alpha: float = 0.2

    def __post_init__(self):
        if not self.layers:
            raise DagError("Mixing needs at least one layer")
        self.layers = [np.asarray(w, dtype=float) for w in self.layers]
        d = self.layers[0].shape[0]
        if any(w.shape != (d, d) for w in self.layers):
            raise DagError("Mixing layers must be square")
        if self.lift is not None:
            self.lift = np.asarray(self.lift, dtype=float)
            if self.lift.shape[1] != d or self.lift.shape[0] < d:
                raise DagError("The lift must map D to n ≥ D")
            if np.linalg.matrix_rank(self.lift) < d:
                raise DagError("The lift must have full column rank")

    @property
    def d(self) -> int:
        return self.layers[0].shape[0]

    @property
    def n(self) -> int:
        return self.d if self.lift is None else self.lift.shape[0]

    @classmethod
    def identity(cls, d: int) -> "MixingSpec":
        return cls([np.eye(d)])

    @classmethod
    def sample(
        cls,
        d: int,
        stream: PrngStream,
        n: Optional[int] = None,
        n_layers: int = 2,
        init: Literal["orthogonal", "gaussian"] = "orthogonal",
    ) -> "MixingSpec":
        layers = [_conditioned_square(d, stream, init) for _ in range(n_layers)]
        lift = None
        if n is not None and n != d:
            for _ in range(100):
                with stream.generator() as gen:
                    lift = gen.standard_normal((n, d)) / np.sqrt(d)
                if np.linalg.matrix_rank(lift) == d:
                    break
        return cls(layers, lift)

    def __call__(self, z: np.ndarray) -> np.ndarray:
        h = np.asarray(z, dtype=float)
        for i, w in enumerate(self.layers):
            if i:
                h = np.where(h > 0, h, self.alpha * h)
            h = h @ w.T
        return h if self.lift is None else h @ self.lift.T

    def to_dict(self) -> dict:
        return {
            "layers": [w.tolist() for w in self.layers],
            "lift": None if self.lift is None else self.lift.tolist(),
            "alpha": self.alpha,
        }


@dataclass
class EnvironmentSpec:
    """
    :param noise_scale: ``env_count × D`` multipliers of the noise
    :param weight_scale: ``env_count × D`` multipliers of the mechanisms
    """

    noise_scale: np.ndarray
    weight_scale: np.ndarray

    def __post_init__(self):
        self.noise_scale = np.atleast_2d(np.asarray(self.noise_scale, dtype=float))
        self.weight_scale = np.atleast_2d(np.asarray(self.weight_scale, dtype=float))
        if self.noise_scale.shape != self.weight_scale.shape:
            raise DagError("Environment modulations must have the same shape")
        if self.env_count < 1:
            raise DagError("At least one environment is needed")
        if np.any(self.noise_scale <= 0) or np.any(self.weight_scale <= 0):
            raise DagError("Environment modulations must be strictly positive")

    @property
    def env_count(self) -> int:
        return self.noise_scale.shape[0]

    @property
    def d(self) -> int:
        return self.noise_scale.shape[1]

    @classmethod
    def single(cls, d: int) -> "EnvironmentSpec":
        return cls(np.ones((1, d)), np.ones((1, d)))

    def to_dict(self) -> dict:
        return {
            "noise_scale": self.noise_scale.tolist(),
            "weight_scale": self.weight_scale.tolist(),
        }


def sample_environments(
    env_count: int,
    d: int,
    stream: PrngStream,
    noise_range: Tuple[float, float] = (0.25, 2.0),
    weight_range: Tuple[float, float] = (1.0, 1.0),
) -> EnvironmentSpec:
    """Environments with log-uniform modulations in the given ranges"""
    with stream.generator() as gen:
        noise = np.exp(gen.uniform(*np.log(noise_range), size=(env_count, d)))
        weight = np.exp(gen.uniform(*np.log(weight_range), size=(env_count, d)))
    return EnvironmentSpec(noise, weight)


@dataclass(frozen=True)
class InterventionSpec:
    """
    ``do_value`` clamps every target to `value` (hard), ``noise_shift``
    adds `value` to their exogenous noise (soft).
    """

    targets: Tuple[int, ...] = ()
    kind: Literal["do_value", "noise_shift"] = "do_value"
    value: float = 0.0
    null: bool = False

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(int(i) for i in self.targets))
        if self.kind not in ("do_value", "noise_shift"):
            raise DagError(f"Unknown intervention kind {self.kind}")
        if not self.targets and not self.null:
            raise DagError("An intervention needs targets unless it is the null one")
        if self.null and self.targets:
            raise DagError("The null intervention has no targets")

    @classmethod
    def none(cls) -> "InterventionSpec":
        return cls(null=True)

    def to_dict(self) -> dict:
        return {
            "targets": list(self.targets),
            "kind": self.kind,
            "value": self.value,
            "null": self.null,
        }

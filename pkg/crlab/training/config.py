"""
Experiment configuration.

Every section is a frozen dataclass validated on construction; the whole
experiment hashes to a stable identifier.

>>> config = ExperimentConfig()
>>> config.run.steps, config.objective.pipeline
(3000, 'static_image')
>>> len(config.config_hash)
64
"""

from dataclasses import asdict, dataclass, field
from typing import Any, Dict, Literal, Optional, Tuple

from crlab.constraints import ConstraintSpec
from crlab.evaluation import RIDGE_ALPHA
from crlab.utils.files import canonical_hash

from .objective import ObjectiveSpec

__all__ = [
    "DataSpec",
    "ModelSpec",
    "OptimizerSpec",
    "RunSpec",
    "EvalSpec",
    "TaskVariant",
    "ConstraintVariant",
    "GridSpec",
    "ExperimentConfig",
]

DataKind = Literal["static", "temporal", "paired"]


def _tuple(value) -> tuple:
    return tuple(_tuple(v) if isinstance(v, (list, tuple)) else v for v in value)


@dataclass(frozen=True)
class DataSpec:
    """
    Synthetic dataset to generate, or `path` of a saved one.

    :param kind: ``static`` (i.i.d. samples), ``temporal`` (sequences) or
        ``paired`` (observational and interventional views)
    :param obs_dim: Observation width, `latent_dim` when omitted
    :param n_per_env: Samples per environment (pairs for ``paired``)
    :param length: Steps per temporal episode
    :param p_edge: Edge probability of the static graph
    :param mixing_layers: Layers of the mixing function, 0 for the identity
    :param intervention: Intervened coordinates of ``paired`` data
    :param seed: Data seed, the run seed when omitted
    """

    kind: DataKind = "static"
    latent_dim: int = 3
    obs_dim: Optional[int] = None
    env_count: int = 1
    n_per_env: int = 500
    episodes: int = 64
    length: int = 8
    lag: int = 1
    instantaneous: bool = True
    p_edge: float = 0.0
    p_instantaneous: float = 0.3
    p_delayed: float = 0.5
    mechanism: Literal["linear", "mlp", "mixed"] = "linear"
    noise: Literal["gaussian", "laplace"] = "gaussian"
    noise_range: Tuple[float, float] = (0.25, 2.0)
    mixing_layers: int = 2
    intervention: Tuple[int, ...] = ()
    intervention_kind: Literal["do_value", "noise_shift"] = "do_value"
    intervention_value: float = 0.0
    seed: Optional[int] = None
    path: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "noise_range", _tuple(self.noise_range))
        object.__setattr__(self, "intervention", _tuple(self.intervention))
        if self.kind not in ("static", "temporal", "paired"):
            raise ValueError(f"Unknown data kind {self.kind}")
        if self.latent_dim < 1 or self.env_count < 1:
            raise ValueError("latent_dim and env_count must be at least 1")
        if self.obs_dim is not None and self.obs_dim < self.latent_dim:
            raise ValueError("Observations cannot be narrower than the latents")
        if self.n_per_env < 1 or self.episodes < 1 or self.lag < 1:
            raise ValueError("Sample counts and lag must be at least 1")
        if self.kind == "temporal" and self.length <= self.lag:
            raise ValueError(
                f"Episodes of {self.length} steps are too short for lag {self.lag}"
            )
        if self.mixing_layers < 0:
            raise ValueError("mixing_layers must be nonnegative")
        if self.kind == "paired" and not self.intervention:
            raise ValueError("Paired data needs intervention targets")


@dataclass(frozen=True)
class ModelSpec:
    """
    :param latent_dim: Learned latent width ``D̂``, the data latent width when
        omitted
    :param feature_dim: Width of the frame features of temporal models
    :param extractor: Pass observations through a frozen random backbone
    :param style_dim: Trailing latents treated as domain-specific style
    :param blocks: Latent blocks of an additive decoder
    :param proj_dim: Width of the contrastive projection head
    """

    latent_dim: Optional[int] = None
    hidden: Tuple[int, ...] = (64, 64)
    activation: str = "leaky_relu"
    feature_dim: int = 16
    extractor: bool = False
    extractor_dim: int = 32
    style_dim: int = 0
    blocks: Optional[Tuple[Tuple[int, ...], ...]] = None
    flow_hidden: Tuple[int, ...] = (32,)
    proj_dim: int = 8

    def __post_init__(self):
        object.__setattr__(self, "hidden", _tuple(self.hidden))
        object.__setattr__(self, "flow_hidden", _tuple(self.flow_hidden))
        if self.blocks is not None:
            object.__setattr__(self, "blocks", _tuple(self.blocks))
        if self.latent_dim is not None and self.latent_dim < 1:
            raise ValueError("latent_dim must be at least 1")
        if self.style_dim < 0:
            raise ValueError("style_dim must be nonnegative")
        if min(self.feature_dim, self.extractor_dim, self.proj_dim) < 1:
            raise ValueError("Feature, extractor and projection widths must be >= 1")


@dataclass(frozen=True)
class OptimizerSpec:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if self.lr <= 0 or self.eps <= 0:
            raise ValueError("Learning rate and epsilon must be positive")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("Betas must lie in [0, 1)")


@dataclass(frozen=True)
class RunSpec:
    """
    :param steps: Optimisation steps, 0 only evaluates the initial model
    :param eval_every: Evaluation cadence, 0 for the initial and final ones only
    :param log_every: Trace cadence of the loss terms
    :param checkpoint_every: Checkpoint cadence, 0 for the final one only
    """

    steps: int = 3000
    batch: int = 64
    seed: int = 0
    eval_every: int = 0
    log_every: int = 10
    checkpoint_every: int = 0

    def __post_init__(self):
        if self.steps < 0:
            raise ValueError(f"steps must be nonnegative, got {self.steps}")
        if self.batch < 1:
            raise ValueError(f"batch must be at least 1, got {self.batch}")
        if self.log_every < 1:
            raise ValueError("log_every must be at least 1")
        if self.eval_every < 0 or self.checkpoint_every < 0:
            raise ValueError("Cadences must be nonnegative")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")


@dataclass(frozen=True)
class EvalSpec:
    """
    :param max_samples: Evaluated samples, taken in dataset order
    """

    method: Literal["pearson", "spearman"] = "pearson"
    regressor: Literal["linear_ridge", "none"] = "linear_ridge"
    alpha: float = RIDGE_ALPHA
    max_samples: int = 2000

    def __post_init__(self):
        if self.method not in ("pearson", "spearman"):
            raise ValueError(f"Unknown correlation method {self.method}")
        if self.regressor not in ("linear_ridge", "none"):
            raise ValueError(f"Unknown regressor {self.regressor}")
        if self.alpha < 0 or self.max_samples < 3:
            raise ValueError("alpha must be nonnegative and max_samples >= 3")


@dataclass(frozen=True)
class TaskVariant:
    """Named task of a grid row"""

    name: str
    task: Any


@dataclass(frozen=True)
class ConstraintVariant:
    """Named constraint set of a grid column"""

    name: str
    constraints: Tuple[ConstraintSpec, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "constraints", tuple(self.constraints))


@dataclass(frozen=True)
class GridSpec:
    """
    Task × constraint grid, each cell repeated over `seeds`.

    An empty `constraints` keeps the constraints of the base objective.
    """

    tasks: Tuple[TaskVariant, ...] = ()
    constraints: Tuple[ConstraintVariant, ...] = ()
    seeds: int = 5
    jobs: int = 1

    def __post_init__(self):
        object.__setattr__(self, "tasks", tuple(self.tasks))
        object.__setattr__(self, "constraints", tuple(self.constraints))
        if not self.tasks:
            raise ValueError("A grid needs at least one task")
        if self.seeds < 1 or self.jobs < 1:
            raise ValueError("seeds and jobs must be at least 1")
        names = [t.name for t in self.tasks]
        if len(set(names)) != len(names):
            raise ValueError(f"Duplicate task names in {names}")


@dataclass(frozen=True)
class ExperimentConfig:
    data: DataSpec = field(default_factory=DataSpec)
    model: ModelSpec = field(default_factory=ModelSpec)
    objective: ObjectiveSpec = field(default_factory=ObjectiveSpec)
    optimizer: OptimizerSpec = field(default_factory=OptimizerSpec)
    run: RunSpec = field(default_factory=RunSpec)
    eval: EvalSpec = field(default_factory=EvalSpec)
    grid: Optional[GridSpec] = None

    def __post_init__(self):
        temporal = self.objective.pipeline == "temporal_video"
        if temporal != (self.data.kind == "temporal") and self.data.path is None:
            raise ValueError(
                f"The {self.objective.pipeline} pipeline cannot train on "
                f"{self.data.kind} data"
            )
        if self.latent_dim <= self.model.style_dim:
            raise ValueError("The style part must leave at least one content latent")

    @property
    def latent_dim(self) -> int:
        return self.model.latent_dim or self.data.latent_dim

    @property
    def data_seed(self) -> int:
        return self.run.seed if self.data.seed is None else self.data.seed

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @property
    def config_hash(self) -> str:
        """SHA-256 of the canonical JSON form, output paths are not part of it"""
        return canonical_hash(self.to_dict())

"""
Task and view descriptions.

>>> TaskSpec("masked").view.kind
'mask'
>>> TaskSpec("contrastive", temperature=0.0)
Traceback (most recent call last):
...
crlab.tasks.specs.TaskError: contrastive temperature must be positive, got 0.0
"""

from dataclasses import asdict, dataclass, field
from typing import Any, Dict, Literal, Optional

__all__ = [
    "ViewSpec",
    "TaskSpec",
    "TaskError",
    "VIEW_KINDS",
    "TASK_KINDS",
    "SQUARED_KINDS",
    "DEFAULT_VIEWS",
    "TRANSFORM_COUNT",
]

ViewKind = Literal[
    "identity", "corrupt", "mask", "two_views", "multi_view", "transform", "prefix"
]
TaskKind = Literal[
    "reconstruction",
    "denoising",
    "masked",
    "next_frame",
    "mid_latent",
    "contrastive",
    "cross_view",
    "prototype",
    "target_pred",
    "transform_correct",
    "autoregressive",
    "multi_view",
]

VIEW_KINDS = (
    "identity",
    "corrupt",
    "mask",
    "two_views",
    "multi_view",
    "transform",
    "prefix",
)
TASK_KINDS = (
    "reconstruction",
    "denoising",
    "masked",
    "next_frame",
    "mid_latent",
    "contrastive",
    "cross_view",
    "prototype",
    "target_pred",
    "transform_correct",
    "autoregressive",
    "multi_view",
)

#: Tasks scored with a squared error
SQUARED_KINDS = frozenset(
    {
        "reconstruction",
        "denoising",
        "masked",
        "next_frame",
        "mid_latent",
        "cross_view",
        "autoregressive",
    }
)

DEFAULT_VIEWS: Dict[str, str] = {
    "reconstruction": "identity",
    "denoising": "corrupt",
    "masked": "mask",
    "next_frame": "identity",
    "mid_latent": "identity",
    "contrastive": "two_views",
    "cross_view": "two_views",
    "prototype": "two_views",
    "target_pred": "identity",
    "transform_correct": "transform",
    "autoregressive": "identity",
    "multi_view": "multi_view",
}

#: Number of fixed coordinate transformations available to ``transform``
TRANSFORM_COUNT = 4


class TaskError(ValueError):
    pass


@dataclass(frozen=True)
class ViewSpec:
    """
    View-generation process applied to a batch before encoding.

    :param kind: Process name, one of `VIEW_KINDS`
    :param noise: Gaussian noise scale of ``corrupt``, jitter of the augmented views
    :param ratio: Masked fraction of the coordinates for ``mask``
    :param dropout: Coordinate dropout probability of the augmented views
    :param classes: Number of transformations drawn by ``transform``
    :param prefix: Number of observed leading steps for ``prefix``
    :param views: Number of augmented views of ``multi_view``
    """

    kind: ViewKind = "identity"
    noise: float = 0.1
    ratio: float = 0.5
    dropout: float = 0.1
    classes: int = TRANSFORM_COUNT
    prefix: int = 1
    views: int = 3

    def __post_init__(self):
        if self.kind not in VIEW_KINDS:
            raise TaskError(f"Unknown view kind {self.kind}")
        if self.kind == "mask" and not 0 < self.ratio < 1:
            raise TaskError(f"Mask ratio must lie in (0, 1), got {self.ratio}")
        if self.kind == "corrupt" and self.noise <= 0:
            raise TaskError(f"Corruption noise must be positive, got {self.noise}")
        if self.noise < 0 or not 0 <= self.dropout < 1:
            raise TaskError("Augmentation noise and dropout must be nonnegative")
        if not 1 <= self.classes <= TRANSFORM_COUNT:
            raise TaskError(f"Between 1 and {TRANSFORM_COUNT} transformations")
        if self.prefix < 1 or self.views < 1:
            raise TaskError("Prefix length and view count must be at least 1")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class TaskSpec:
    """
    Task component of an objective: view process, target and loss.

    :param kind: Loss name, one of `TASK_KINDS`
    :param weight: Factor ``λ_task`` of the task loss in the objective
    :param temperature: Contrastive temperature ``τ``
    :param prototypes: Number ``K`` of prototypes
    :param proto_temperature: Prototype temperature ``τ_p``
    :param sinkhorn: Swapped prediction with balanced targets instead of hard
        nearest-prototype assignment
    :param sinkhorn_iters: Balancing iterations
    :param symmetric: Two-direction contrastive loss with gradients in both views
    :param exclude_same_sequence: Drop other steps of the same sequence from the
        contrastive negatives
    :param view: View process, the default of `kind` when omitted
    """

    kind: TaskKind = "reconstruction"
    weight: float = 1.0
    temperature: float = 0.1
    prototypes: int = 8
    proto_temperature: float = 0.1
    sinkhorn: bool = False
    sinkhorn_iters: int = 3
    symmetric: bool = False
    exclude_same_sequence: bool = False
    view: Optional[ViewSpec] = field(default=None)

    def __post_init__(self):
        if self.kind not in TASK_KINDS:
            raise TaskError(f"Unknown task kind {self.kind}")
        if self.weight < 0:
            raise TaskError(f"Task weight must be nonnegative, got {self.weight}")
        if self.temperature <= 0:
            raise TaskError(
                f"contrastive temperature must be positive, got {self.temperature}"
            )
        if self.proto_temperature <= 0:
            raise TaskError("Prototype temperature must be positive")
        if self.prototypes < 1 or self.sinkhorn_iters < 1:
            raise TaskError("Prototype count and Sinkhorn iterations must be >= 1")
        if self.view is None:
            object.__setattr__(self, "view", ViewSpec(DEFAULT_VIEWS[self.kind]))
        elif isinstance(self.view, dict):
            object.__setattr__(self, "view", ViewSpec(**self.view))

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

from .losses import (
    MASK_EPSILON,
    SINKHORN_EPSILON,
    loss_classification,
    loss_infonce,
    loss_multiview,
    loss_prototype,
    loss_soft_classification,
    loss_squared_family,
    sinkhorn_assign,
)
from .specs import (
    DEFAULT_VIEWS,
    SQUARED_KINDS,
    TASK_KINDS,
    TRANSFORM_COUNT,
    VIEW_KINDS,
    TaskError,
    TaskSpec,
    ViewSpec,
)
from .views import ViewMeta, apply_transform, masked_count, view_generate

__all__ = [
    "ViewSpec",
    "TaskSpec",
    "TaskError",
    "ViewMeta",
    "view_generate",
    "apply_transform",
    "masked_count",
    "loss_squared_family",
    "loss_infonce",
    "sinkhorn_assign",
    "loss_prototype",
    "loss_classification",
    "loss_soft_classification",
    "loss_multiview",
    "MASK_EPSILON",
    "SINKHORN_EPSILON",
    "VIEW_KINDS",
    "TASK_KINDS",
    "SQUARED_KINDS",
    "DEFAULT_VIEWS",
    "TRANSFORM_COUNT",
]

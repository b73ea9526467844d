from typing import Any, Dict, List, Literal, Optional, TypedDict

Pipeline = Literal["static_image", "temporal_video", "sparsity_vae"]
CellStatus = Literal["ok", "failed"]


class ObjectiveDocument(TypedDict, total=False):
    pipeline: Pipeline
    task: Dict[str, Any]
    constraints: List[Dict[str, Any]]


class TaskVariantDocument(TypedDict):
    name: str
    task: Dict[str, Any]


class ConstraintVariantDocument(TypedDict):
    name: str
    constraints: List[Dict[str, Any]]


class GridDocument(TypedDict, total=False):
    tasks: List[TaskVariantDocument]
    constraints: List[ConstraintVariantDocument]
    seeds: int
    jobs: int


class ConfigDocument(TypedDict, total=False):
    schema_version: int
    data: Dict[str, Any]
    model: Dict[str, Any]
    objective: ObjectiveDocument
    optimizer: Dict[str, Any]
    run: Dict[str, Any]
    eval: Dict[str, Any]
    grid: Optional[GridDocument]


class GridRow(TypedDict, total=False):
    task: str
    constraint: str
    seed: int
    mcc: float
    r2: Optional[float]
    method: str
    status: CellStatus
    error: str

"""
Objectives, optimisation, training runs and task × constraint grids.
"""

from .config import (
    ConstraintVariant,
    DataSpec,
    EvalSpec,
    ExperimentConfig,
    GridSpec,
    ModelSpec,
    OptimizerSpec,
    RunSpec,
    TaskVariant,
)
from .data import Batch, RunStreams, build_dataset, sample_batch
from .grid import GRID_NAME, GridCell, GridResult, grid_cells, grid_run, read_grid_rows
from .model import Model
from .objective import (
    PIPELINE_CONSTRAINTS,
    PIPELINES,
    IncompatibleObjectiveError,
    ObjectiveSpec,
    compose_total_loss,
    term_names,
)
from .optim import Adam, AdamState, DivergenceError, adam_step
from .record import RECORD_SCHEMA, RecordSchemaError, RunRecord
from .run import (
    CHECKPOINT_NAME,
    RECORD_NAME,
    CheckpointMismatchError,
    build_model,
    evaluate_model,
    load_checkpoint,
    save_checkpoint,
    train_run,
)

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
    "Batch",
    "RunStreams",
    "build_dataset",
    "sample_batch",
    "Model",
    "ObjectiveSpec",
    "IncompatibleObjectiveError",
    "compose_total_loss",
    "term_names",
    "PIPELINES",
    "PIPELINE_CONSTRAINTS",
    "Adam",
    "AdamState",
    "adam_step",
    "DivergenceError",
    "RunRecord",
    "RecordSchemaError",
    "RECORD_SCHEMA",
    "train_run",
    "build_model",
    "evaluate_model",
    "save_checkpoint",
    "load_checkpoint",
    "CheckpointMismatchError",
    "CHECKPOINT_NAME",
    "RECORD_NAME",
    "GridCell",
    "GridResult",
    "grid_cells",
    "grid_run",
    "read_grid_rows",
    "GRID_NAME",
]

"""
Task × constraint grids.

Every cell of a grid trains the base experiment with one task variant and
one constraint variant, repeated over seeds. Cells are independent: each
has its own derived seed and its own model state, so they may run in any
order or in parallel and the result table stays the same.
"""

import json
import logging
import multiprocessing as mp
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from crlab.evaluation import ResultTable, aggregate_results
from crlab.tensor import derive_seed
from crlab.utils.files import PathLike, atomic_write
from crlab.utils.types import GridRow

from .config import ConstraintVariant, ExperimentConfig
from .record import RecordSchemaError
from .run import train_run

__all__ = [
    "GridCell",
    "GridResult",
    "grid_cells",
    "grid_run",
    "read_grid_rows",
    "GRID_NAME",
]

logger = logging.getLogger(__name__)

GRID_NAME = "grid.json"

#: Version of the ``grid.json`` layout
GRID_SCHEMA = 1


@dataclass(frozen=True)
class GridCell:
    """
    :param index: ``(task, constraint, repetition)`` position in the grid
    :param task: Row label
    :param constraint: Column label
    :param config: Experiment of the cell, without grid
    """

    index: Tuple[int, int, int]
    task: str
    constraint: str
    config: ExperimentConfig

    @property
    def name(self) -> str:
        return "-".join(str(i) for i in self.index)


@dataclass
class GridResult:
    """Per-seed rows and their aggregation, rows in cell order"""

    rows: List[GridRow]
    table: ResultTable

    @property
    def succeeded(self) -> int:
        return sum(row["status"] == "ok" for row in self.rows)

    def to_dict(self) -> Dict[str, Any]:
        return {"schema_version": GRID_SCHEMA, "rows": self.rows}


def _variants(config: ExperimentConfig) -> List[ConstraintVariant]:
    grid = config.grid
    assert grid is not None
    if grid.constraints:
        return list(grid.constraints)
    base = config.objective
    return [ConstraintVariant(base.constraint_label, base.constraints)]


def grid_cells(config: ExperimentConfig) -> List[GridCell]:
    """
    Cells of the grid of `config`, in report order.

    The training seed of a cell derives from the base seed and the cell
    position; the data seed only from the base seed and the repetition, so
    that every cell of a repetition sees the same data.

    :raises ValueError: `config` has no grid
    :raises IncompatibleObjectiveError: A task cannot be combined with a
        constraint variant
    """
    grid = config.grid
    if grid is None:
        raise ValueError("The configuration has no grid section")
    base = config.run.seed
    cells = []
    for ti, tv in enumerate(grid.tasks):
        for ci, cv in enumerate(_variants(config)):
            objective = replace(
                config.objective, task=tv.task, constraints=cv.constraints
            )
            for rep in range(grid.seeds):
                data_seed = config.data.seed
                if data_seed is None:
                    data_seed = derive_seed(base, rep)
                cell = replace(
                    config,
                    data=replace(config.data, seed=data_seed),
                    objective=objective,
                    run=replace(config.run, seed=derive_seed(base, ti, ci, rep)),
                    grid=None,
                )
                cells.append(GridCell((ti, ci, rep), tv.name, cv.name, cell))
    return cells


def _run_cell(cell: GridCell, out: Optional[str]) -> GridRow:
    row = GridRow(task=cell.task, constraint=cell.constraint, seed=cell.index[2])
    cell_dir = None if out is None else Path(out) / "cells" / cell.name
    try:
        record = train_run(cell.config, cell_dir, labels=(cell.task, cell.constraint))
    except Exception as err:
        logger.warning(
            "Cell %s (%s, %s) failed: %s: %s",
            cell.name,
            cell.task,
            cell.constraint,
            type(err).__name__,
            err,
        )
        row["mcc"] = row["r2"] = np.nan
        row["method"] = cell.config.eval.method
        row["status"] = "failed"
        row["error"] = f"{type(err).__name__}: {err}"
        return row
    final = record.result_row()
    row["mcc"], row["r2"] = final["mcc"], final["r2"]
    row["method"] = final["method"]
    row["status"] = "ok"
    return row


def grid_run(
    config: ExperimentConfig,
    out: Optional[PathLike] = None,
    jobs: Optional[int] = None,
) -> GridResult:
    """
    Train every cell of the grid of `config` and aggregate the seeds.

    A failing cell is logged and marked ``failed`` in the table; the other
    cells still run.

    :param out: Directory receiving one run directory per cell and
        ``grid.json``
    :param jobs: Worker processes, the grid's `jobs` when omitted
    """
    cells = grid_cells(config)
    assert config.grid is not None
    jobs = jobs or config.grid.jobs
    target = None if out is None else str(out)
    logger.info("Running %d grid cells with %d job(s)", len(cells), jobs)
    if jobs > 1 and len(cells) > 1:
        ctx = mp.get_context("spawn")
        with ProcessPoolExecutor(max_workers=jobs, mp_context=ctx) as pool:
            futures = [pool.submit(_run_cell, cell, target) for cell in cells]
            rows = [f.result() for f in futures]
    else:
        rows = [_run_cell(cell, target) for cell in cells]

    order = list(dict.fromkeys((c.task, c.constraint) for c in cells))
    result = GridResult(rows, aggregate_results(rows, order=order))
    if out is not None:
        text = json.dumps(result.to_dict(), indent=2, sort_keys=True, default=float)
        atomic_write(Path(out) / GRID_NAME, text)
    return result


def read_grid_rows(path: PathLike) -> List[GridRow]:
    """
    Rows of a ``grid.json`` written by `grid_run`.

    :raises RecordSchemaError: The file has another layout version
    """
    d = json.loads(Path(path).read_text())
    version = d.get("schema_version")
    if version != GRID_SCHEMA:
        raise RecordSchemaError(
            f"Grid schema version {version}, expected {GRID_SCHEMA}"
        )
    return list(d["rows"])

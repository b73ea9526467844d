from dataclasses import replace

import numpy as np
import pytest

from crlab.constraints import ConstraintSpec
from crlab.evaluation import aggregate_results
from crlab.tasks import TaskSpec
from crlab.training import (
    GRID_NAME,
    ConstraintVariant,
    GridSpec,
    IncompatibleObjectiveError,
    TaskVariant,
    grid_cells,
    grid_run,
    read_grid_rows,
    train_run,
)
from crlab.training.grid import _run_cell

from .conftest import static_config

SIX_TASKS = (
    TaskVariant("Reconstruction", TaskSpec("reconstruction")),
    TaskVariant("Contrastive Learning", TaskSpec("contrastive")),
    TaskVariant("Denoising Reconstruction", TaskSpec("denoising")),
    TaskVariant("Cross-view Prediction", TaskSpec("cross_view")),
    TaskVariant("Prototype-based Learning", TaskSpec("prototype", sinkhorn=True)),
    TaskVariant("Masked Reconstruction", TaskSpec("masked")),
)


def _grid(tasks, constraints=(), seeds=1, steps=2):
    config = static_config(steps=steps)
    return replace(config, grid=GridSpec(tuple(tasks), tuple(constraints), seeds))


class TestGridSpec:
    def test_needs_tasks(self):
        with pytest.raises(ValueError):
            GridSpec(())

    def test_unique_names(self):
        task = TaskVariant("same", TaskSpec())
        with pytest.raises(ValueError, match="Duplicate"):
            GridSpec((task, task))


class TestGridCells:
    def test_layout(self):
        constraints = [
            ConstraintVariant("KL", (ConstraintSpec("vae_kl"),)),
            ConstraintVariant("none"),
        ]
        cells = grid_cells(_grid(SIX_TASKS[:2], constraints, seeds=3))
        assert len(cells) == 12
        indices = [c.index for c in cells[:4]]
        assert indices == [(0, 0, 0), (0, 0, 1), (0, 0, 2), (0, 1, 0)]
        assert cells[3].config.objective.constraints == ()
        assert all(c.config.grid is None for c in cells)

    def test_seeds(self):
        cells = grid_cells(_grid(SIX_TASKS[:2], seeds=2))
        assert len({c.config.run.seed for c in cells}) == len(cells)
        by_rep = {}
        for c in cells:
            by_rep.setdefault(c.index[2], set()).add(c.config.data_seed)
        assert all(len(seeds) == 1 for seeds in by_rep.values())
        assert by_rep[0] != by_rep[1]

    def test_base_constraints(self):
        cells = grid_cells(_grid(SIX_TASKS[:1]))
        assert cells[0].constraint == "vae_kl"
        assert cells[0].config.objective.constraint("vae_kl") is not None

    def test_incompatible_cell(self):
        tasks = [TaskVariant("next", TaskSpec("next_frame"))]
        with pytest.raises(IncompatibleObjectiveError):
            grid_cells(_grid(tasks))

    def test_no_grid(self):
        with pytest.raises(ValueError, match="no grid"):
            grid_cells(static_config())


class TestGridRun:
    def test_single_cell_is_a_run(self):
        config = _grid(SIX_TASKS[:1], steps=4)
        result = grid_run(config)
        record = train_run(grid_cells(config)[0].config)
        assert len(result.table) == 1
        assert result.rows[0]["mcc"] == record.final.mcc
        assert result.rows[0]["r2"] == record.final.r2
        assert result.table["mcc_std"][0] == 0.0

    def test_six_task_table(self):
        result = grid_run(_grid(SIX_TASKS, seeds=2))
        assert list(result.table["task"]) == [t.name for t in SIX_TASKS]
        assert set(result.table["constraint"]) == {"vae_kl"}
        assert list(result.table["seeds"]) == [2] * 6
        assert np.all(np.isfinite(result.table["mcc_std"]))

    def test_failed_cell(self, caplog):
        constraints = [
            ConstraintVariant("KL", (ConstraintSpec("vae_kl"),)),
            ConstraintVariant("Invariance", (ConstraintSpec("invariance"),)),
        ]
        result = grid_run(_grid(SIX_TASKS[:1], constraints))
        assert result.succeeded == 1
        assert [r["status"] for r in result.rows] == ["ok", "failed"]
        assert "paired" in result.rows[1]["error"]
        assert list(result.table["status"]) == ["ok", "failed"]
        assert "Invariance" in caplog.text

    def test_unwritable_cell(self, tmp_path):
        (tmp_path / "cells").mkdir()
        (tmp_path / "cells" / "0-0-1").write_text("")
        result = grid_run(_grid(SIX_TASKS[:1], seeds=2), tmp_path)
        assert [r["status"] for r in result.rows] == ["ok", "failed"]
        assert result.rows[1]["error"].split(":")[0] in (
            "FileExistsError",
            "NotADirectoryError",
        )
        assert list(result.table["status"]) == ["partial"]
        assert read_grid_rows(tmp_path / GRID_NAME) == result.rows

    def test_runtime_error_cell(self, monkeypatch):
        def flaky(config, out=None, **kwargs):
            if config.run.seed == cells[0].config.run.seed:
                raise RuntimeError("tape closed")
            return train_run(config, out, **kwargs)

        config = _grid(SIX_TASKS[:1], seeds=2)
        cells = grid_cells(config)
        monkeypatch.setattr("crlab.training.grid.train_run", flaky)
        result = grid_run(config)
        assert [r["status"] for r in result.rows] == ["failed", "ok"]
        assert result.rows[0]["error"] == "RuntimeError: tape closed"

    def test_order_invariant(self):
        config = _grid(SIX_TASKS[:2], seeds=2)
        result = grid_run(config)
        cells = grid_cells(config)
        rows = [_run_cell(cell, None) for cell in reversed(cells)]
        order = [(t.name, "vae_kl") for t in SIX_TASKS[:2]]
        table = aggregate_results(rows, order=order)
        for name in ("mcc_mean", "mcc_std", "r2_mean", "r2_std"):
            np.testing.assert_allclose(table[name], result.table[name], rtol=1e-12)

    def test_outputs(self, tmp_path):
        result = grid_run(_grid(SIX_TASKS[:1], seeds=2), tmp_path)
        assert read_grid_rows(tmp_path / GRID_NAME) == result.rows
        assert (tmp_path / "cells" / "0-0-1" / "record.json").is_file()

from dataclasses import replace

import numpy as np
import pytest

from crlab.constraints import ConstraintSpec
from crlab.training import (
    CHECKPOINT_NAME,
    RECORD_NAME,
    CheckpointMismatchError,
    DataSpec,
    IncompatibleObjectiveError,
    ModelSpec,
    ObjectiveSpec,
    OptimizerSpec,
    RecordSchemaError,
    RunRecord,
    RunSpec,
    build_dataset,
    train_run,
)
from crlab.utils.container import read_container

from .conftest import static_config


def _arrays(run_dir):
    return read_container(run_dir / CHECKPOINT_NAME).arrays


class TestTrainRun:
    def test_no_steps(self, small_static):
        record = train_run(replace(small_static, run=RunSpec(steps=0)))
        assert record.steps == 0
        assert [e["step"] for e in record.evaluations] == [0]
        assert record.logged_steps == 0
        assert 0 <= record.final.mcc <= 1

    def test_traces(self, small_static):
        config = replace(small_static, run=RunSpec(steps=5, batch=16, log_every=2))
        record = train_run(config)
        assert record.traces["step"] == [0, 2, 4]
        assert set(record.traces) == {"step", "total", "task", "vae_kl"}
        assert all(len(v) == record.logged_steps for v in record.traces.values())
        assert [e["step"] for e in record.evaluations] == [0, 5]

    def test_eval_cadence(self, small_static):
        run = RunSpec(steps=6, batch=16, eval_every=2)
        record = train_run(replace(small_static, run=run))
        assert [e["step"] for e in record.evaluations] == [0, 2, 4, 6]

    def test_labels(self, small_static):
        assert train_run(small_static).constraint == "vae_kl"
        record = train_run(small_static, labels=("Reconstruction", "VAE"))
        assert record.result_row()["task"] == "Reconstruction"

    def test_temporal(self, small_temporal):
        record = train_run(small_temporal)
        assert {"init_kl", "future_kl", "latent", "delta"} <= set(record.traces)
        assert np.isfinite(record.traces["total"]).all()

    def test_deterministic(self, small_static, tmp_path):
        a = train_run(small_static, tmp_path / "a")
        b = train_run(small_static, tmp_path / "b")
        assert a.traces == b.traces
        assert a.final == b.final
        for name, value in _arrays(tmp_path / "a").items():
            assert value.tobytes() == _arrays(tmp_path / "b")[name].tobytes()

    def test_seed_changes_run(self, small_static):
        other = replace(small_static, run=replace(small_static.run, seed=1))
        assert train_run(small_static).traces != train_run(other).traces

    @pytest.mark.parametrize("temporal", [False, True])
    def test_resume(self, small_static, small_temporal, tmp_path, temporal):
        config = small_temporal if temporal else small_static
        config = replace(config, run=replace(config.run, steps=6))
        whole = train_run(config, tmp_path / "whole")
        train_run(config, tmp_path / "first", stop_at=3)
        first = RunRecord.read(tmp_path / "first" / RECORD_NAME)
        assert first.steps == 3
        resumed = train_run(config, tmp_path / "second", resume_from=tmp_path / "first")
        assert resumed.steps == 6
        assert resumed.traces == whole.traces
        assert resumed.final == whole.final
        expected = _arrays(tmp_path / "whole")
        restored = _arrays(tmp_path / "second")
        assert set(restored) == set(expected)
        for name, value in expected.items():
            assert value.tobytes() == restored[name].tobytes()

    def test_resume_other_config(self, small_static, tmp_path):
        train_run(small_static, tmp_path / "run", stop_at=2)
        other = replace(small_static, optimizer=OptimizerSpec(lr=0.01))
        with pytest.raises(CheckpointMismatchError):
            train_run(other, resume_from=tmp_path / "run")

    def test_record_written(self, small_static, tmp_path):
        record = train_run(small_static, tmp_path)
        assert RunRecord.read(tmp_path / RECORD_NAME) == record
        assert record.checkpoints == [str(tmp_path / CHECKPOINT_NAME)]

    def test_temporal_objective_on_static_data(self, small_temporal, small_static):
        ds = build_dataset(small_static.data, 0)
        with pytest.raises(IncompatibleObjectiveError, match="too short"):
            train_run(small_temporal, dataset=ds)

    def test_invariance_needs_pairs(self):
        objective = ObjectiveSpec(constraints=[ConstraintSpec("invariance")])
        with pytest.raises(IncompatibleObjectiveError, match="paired"):
            train_run(static_config(objective))

    def test_invariance_on_pairs(self):
        objective = ObjectiveSpec(constraints=[ConstraintSpec("invariance")])
        config = static_config(
            objective,
            kind="paired",
            env_count=1,
            latent_dim=3,
            intervention=(0,),
        )
        record = train_run(config)
        assert "invariance" in record.traces


class TestRunRecord:
    def test_schema_version(self, small_static):
        d = train_run(replace(small_static, run=RunSpec(steps=0))).to_dict()
        d["schema_version"] = 99
        with pytest.raises(RecordSchemaError):
            RunRecord.from_dict(d)

    def test_to_pandas(self, small_static):
        frame = train_run(small_static).to_pandas()
        assert list(frame.index) == [0, 1, 2, 3, 4]
        np.testing.assert_allclose(
            frame["total"], frame["task"] + frame["vae_kl"], rtol=1e-12
        )

    def test_unevaluated(self):
        with pytest.raises(ValueError):
            RunRecord("hash", 0, 0).result_row()


@pytest.mark.slow
def test_smoke_loss_decreases():
    changes = []
    for seed in range(5):
        config = static_config(steps=200)
        config = replace(
            config,
            data=DataSpec(latent_dim=3, env_count=5, n_per_env=200),
            model=ModelSpec(hidden=(32, 32)),
            run=RunSpec(steps=200, batch=64, seed=seed, log_every=10),
        )
        totals = train_run(config).traces["total"]
        changes.append(np.mean(totals[-3:]) - np.mean(totals[:3]))
    assert np.median(changes) < 0

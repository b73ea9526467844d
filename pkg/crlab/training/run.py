"""
Training runs.

`train_run` optimises the objective of an `ExperimentConfig` with Adam,
traces every loss term, evaluates the learned representation at the
configured cadence and checkpoints the full training state, so that a run
resumed from a checkpoint ends bitwise equal to an uninterrupted one.
"""

import logging
from pathlib import Path
from typing import Dict, Optional, Tuple

import numpy as np

from crlab.evaluation import EvalReport, evaluate
from crlab.scm import Dataset
from crlab.tensor import Tape, Tensor, backward, grad
from crlab.utils.container import read_container, write_container
from crlab.utils.files import PathLike

from .config import EvalSpec, ExperimentConfig
from .data import RunStreams, build_dataset, sample_batch
from .model import Model
from .objective import IncompatibleObjectiveError, compose_total_loss
from .optim import Adam, DivergenceError
from .record import RunRecord

__all__ = [
    "train_run",
    "build_model",
    "evaluate_model",
    "save_checkpoint",
    "load_checkpoint",
    "CheckpointMismatchError",
    "CHECKPOINT_NAME",
    "RECORD_NAME",
]

logger = logging.getLogger(__name__)

CHECKPOINT_NAME = "checkpoint.crl"
RECORD_NAME = "record.json"

_ADAM_PREFIX = "adam."


class CheckpointMismatchError(ValueError):
    pass


def _check_dataset(config: ExperimentConfig, ds: Dataset, lag: int):
    if config.objective.pipeline == "temporal_video":
        if ds.T <= max(lag, 1):
            raise IncompatibleObjectiveError(
                f"Sequences of {ds.T} steps are too short for lag {lag}"
            )
    elif ds.T != 1:
        raise IncompatibleObjectiveError(
            f"The {config.objective.pipeline} pipeline needs single observations"
        )
    if config.objective.constraint("invariance") is not None and not ds.paired:
        raise IncompatibleObjectiveError("invariance needs paired data")


def build_model(config: ExperimentConfig, ds: Dataset) -> Model:
    """Model of `config` sized for `ds`"""
    lag = int(ds.meta.get("lag", config.data.lag))
    _check_dataset(config, ds, lag)
    return Model(config, ds.n, ds.env_count, lag, config.data_seed, ds.invariant)


def evaluate_model(model: Model, ds: Dataset, spec: EvalSpec) -> EvalReport:
    """
    MCC and R² of the deterministic representation of the first clean
    samples of `ds` against their true latents.
    """
    per = ds.T if model.temporal else 1
    k = min(ds.episodes, -(-spec.max_samples // per))
    z_hat = model.embed(ds.x_obs[:k])[: spec.max_samples]
    z_true = ds.z_true[:k].reshape(-1, ds.d)[: spec.max_samples]
    return evaluate(z_hat, z_true, spec.method, spec.regressor, spec.alpha)


def save_checkpoint(
    path: PathLike,
    model: Model,
    opt: Adam,
    streams: RunStreams,
    step: int,
    config_hash: str,
):
    """Parameters, Adam moments, step and stream counters, in one container"""
    arrays = dict(model.state_dict())
    arrays.update(opt.state_arrays())
    meta = {
        "kind": "checkpoint",
        "step": step,
        "adam_t": opt.state.t,
        "streams": streams.counters(),
        "config_hash": config_hash,
    }
    write_container(path, arrays, meta)
    logger.debug("Checkpoint of step %d written to %s", step, path)


def load_checkpoint(
    path: PathLike,
    model: Model,
    opt: Adam,
    streams: RunStreams,
    config_hash: Optional[str] = None,
) -> int:
    """
    Restore the state saved by `save_checkpoint`.

    :return: The step to resume from
    :raises CheckpointMismatchError: The checkpoint belongs to another
        configuration
    """
    container = read_container(path)
    meta = container.meta
    if config_hash is not None and meta.get("config_hash") != config_hash:
        raise CheckpointMismatchError(f"{path} was written by another configuration")
    params = {
        k: v for k, v in container.arrays.items() if not k.startswith(_ADAM_PREFIX)
    }
    model.load_state_dict(params)
    opt.load_state_arrays(container.arrays, meta["adam_t"])
    streams.restore(meta["streams"])
    return int(meta["step"])


def _culprit(terms: Dict[str, Tensor], params) -> str:
    """First loss term whose gradient is not finite"""
    inputs = list(params.values())
    for name, value in terms.items():
        if not value.requires_grad:
            continue
        grads = grad(value, inputs)
        if any(not np.all(np.isfinite(g.numpy())) for g in grads):
            return name
    return "total"


def train_run(
    config: ExperimentConfig,
    out: Optional[PathLike] = None,
    resume_from: Optional[PathLike] = None,
    stop_at: Optional[int] = None,
    dataset: Optional[Dataset] = None,
    labels: Optional[Tuple[str, str]] = None,
) -> RunRecord:
    """
    Train the model of `config` and evaluate it.

    :param out: Run directory receiving the checkpoint and the record
    :param resume_from: Run directory of an interrupted run
    :param stop_at: Stop after this many steps, leaving a resumable checkpoint
    :param dataset: Dataset to train on instead of the one `config` describes
    :param labels: Task and constraint labels of the record, the task kind and
        constraint kinds when omitted
    :raises DivergenceError: A loss term or gradient is not finite
    :raises IncompatibleObjectiveError: The objective cannot use the dataset
    """
    ds = dataset
    if ds is None:
        ds = build_dataset(config.data, config.data_seed)
    model = build_model(config, ds)
    o = config.optimizer
    opt = Adam(model.parameters(), o.lr, (o.beta1, o.beta2), o.eps)
    streams = RunStreams.from_seed(config.run.seed)
    run = config.run
    task, constraint = labels or (
        config.objective.task.kind,
        config.objective.constraint_label,
    )
    record = RunRecord(
        config.config_hash, run.seed, config.data_seed, task=task, constraint=constraint
    )

    start = 0
    if resume_from is not None:
        previous = Path(resume_from)
        start = load_checkpoint(
            previous / CHECKPOINT_NAME, model, opt, streams, config.config_hash
        )
        if (previous / RECORD_NAME).exists():
            record = RunRecord.read(previous / RECORD_NAME)
        logger.info("Resuming %s at step %d", previous, start)
    end = run.steps if stop_at is None else min(stop_at, run.steps)

    def checkpoint(step: int):
        if out is None:
            return
        path = Path(out) / CHECKPOINT_NAME
        save_checkpoint(path, model, opt, streams, step, config.config_hash)
        if str(path) not in record.checkpoints:
            record.checkpoints.append(str(path))

    def evaluation(step: int, total: Optional[float]):
        report = evaluate_model(model, ds, config.eval)
        record.add_evaluation(step, report)
        logger.info(
            "step %d total %s mcc %.4f r2 %s",
            step,
            "-" if total is None else f"{total:.6g}",
            report.mcc,
            "-" if report.r2 is None else f"{report.r2:.4f}",
        )

    if start == 0 and not record.evaluations:
        evaluation(0, None)

    params = model.parameters()
    for step in range(start, end):
        batch = sample_batch(ds, run.batch, streams.batch)
        with Tape():
            total, terms = compose_total_loss(
                config.objective, batch, model, step, streams
            )
            grads = backward(total)
            values = {name: grads.wrt(p).numpy() for name, p in params.items()}
            bad = [name for name, g in values.items() if not np.all(np.isfinite(g))]
            if bad:
                raise DivergenceError(
                    _culprit(terms, params), step, f"non-finite gradient of {bad[0]}"
                )
        opt.step(values)
        model.after_step()
        done = step + 1
        if step % run.log_every == 0 or done == run.steps:
            breakdown = {"total": total.item()}
            breakdown.update({name: t.item() for name, t in terms.items()})
            record.log(step, breakdown)
            logger.debug("step %d %s", step, breakdown)
        if done == run.steps or (run.eval_every and done % run.eval_every == 0):
            evaluation(done, total.item())
        if run.checkpoint_every and done % run.checkpoint_every == 0:
            checkpoint(done)

    record.steps = end
    if out is not None:
        checkpoint(end)
        record.write(Path(out) / RECORD_NAME)
    return record

"""
Training data: dataset construction, mini-batches and the run's random
streams.
"""

import logging
from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np

from crlab.scm import (
    Dataset,
    InterventionSpec,
    MixingSpec,
    NoiseSpec,
    generate_paired,
    generate_static,
    generate_temporal,
    load_dataset,
    pair_datasets,
    sample_environments,
    sample_scm,
    sample_temporal_scm,
)
from crlab.tensor import PrngStream, Stream

from .config import DataSpec

__all__ = ["build_dataset", "Batch", "sample_batch", "RunStreams"]

logger = logging.getLogger(__name__)


def _mixing(spec: DataSpec, stream: PrngStream) -> MixingSpec:
    n = spec.obs_dim or spec.latent_dim
    if spec.mixing_layers == 0:
        if n != spec.latent_dim:
            raise ValueError("An identity mixing needs obs_dim == latent_dim")
        return MixingSpec.identity(spec.latent_dim)
    return MixingSpec.sample(spec.latent_dim, stream, n=n, n_layers=spec.mixing_layers)


def build_dataset(spec: DataSpec, seed: int) -> Dataset:
    """
    Load `spec.path`, or generate the dataset `spec` describes from the data
    stream of `seed`.
    """
    if spec.path is not None:
        ds = load_dataset(spec.path)
        logger.debug("Loaded dataset %s from %s", ds.summary(), spec.path)
        return ds
    stream = PrngStream(seed, Stream.DATA)
    d = spec.latent_dim
    noise = NoiseSpec(spec.noise)
    if spec.kind == "temporal":
        tscm = sample_temporal_scm(
            d,
            spec.lag,
            stream,
            p_instantaneous=spec.p_instantaneous,
            p_delayed=spec.p_delayed,
            instantaneous=spec.instantaneous,
            kind=spec.mechanism,
            noise=noise,
        )
    else:
        scm = sample_scm(d, spec.p_edge, stream, kind=spec.mechanism, noise=noise)
    mixing = _mixing(spec, stream)
    envs = None
    if spec.env_count > 1:
        envs = sample_environments(spec.env_count, d, stream, spec.noise_range)
    if spec.kind == "temporal":
        return generate_temporal(tscm, spec.episodes, spec.length, stream, mixing, envs)
    if spec.kind == "static":
        return generate_static(scm, mixing, envs, spec.n_per_env, stream)
    intervention = InterventionSpec(
        spec.intervention, spec.intervention_kind, spec.intervention_value
    )
    v1, v2, invariant = generate_paired(
        scm, mixing, intervention, spec.n_per_env, stream
    )
    return pair_datasets(v1, v2, invariant)


@dataclass
class Batch:
    """
    :param x: Observations ``(B, T, n)``
    :param u: Environment index of each episode
    :param x_pair: Interventional view of `x`, for paired data
    :param index: Episode indices in the dataset
    """

    x: np.ndarray
    u: np.ndarray
    x_pair: Optional[np.ndarray] = None
    index: Optional[np.ndarray] = None

    @property
    def size(self) -> int:
        return self.x.shape[0]


def sample_batch(ds: Dataset, size: int, stream: PrngStream) -> Batch:
    """`size` distinct episodes drawn from `stream`, all of them when fewer"""
    index = np.sort(stream.permutation(ds.episodes)[:size])
    x_pair = ds.x_pair[index] if ds.x_pair is not None else None
    return Batch(ds.x_obs[index], ds.u[index], x_pair, index)


@dataclass
class RunStreams:
    """Random streams consumed while training, one per purpose"""

    batch: PrngStream
    mask: PrngStream
    reparam: PrngStream

    @classmethod
    def from_seed(cls, seed: int) -> "RunStreams":
        return cls(
            PrngStream(seed, Stream.BATCH),
            PrngStream(seed, Stream.MASK),
            PrngStream(seed, Stream.REPARAM),
        )

    def counters(self) -> Dict[str, int]:
        return {
            "batch": self.batch.counter,
            "mask": self.mask.counter,
            "reparam": self.reparam.counter,
        }

    def restore(self, counters: Dict[str, int]):
        for name, value in counters.items():
            getattr(self, name).counter = int(value)

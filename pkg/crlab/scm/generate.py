"""
Sampling of static, temporal and paired (interventional) datasets.

>>> from crlab.tensor import PrngStream
>>> from crlab.scm import DagSpec, MechanismSpec, MixingSpec, ScmSpec
>>> scm = ScmSpec(DagSpec.empty(2), MechanismSpec.linear(np.zeros((2, 2))))
>>> ds = generate_static(scm, MixingSpec.identity(2), None, 5, PrngStream(0))
>>> ds.z_true.shape, bool((ds.x_obs == ds.z_true).all())
((5, 1, 2), True)
"""

import logging
from typing import Optional, Tuple

import numpy as np

from crlab.tensor import PrngStream
from crlab.utils.files import canonical_hash

from .dataset import Dataset
from .graphs import DagError, invariant_set
from .mechanisms import (
    EnvironmentSpec,
    InterventionSpec,
    MixingSpec,
    ScmSpec,
    TemporalScmSpec,
    sample_noise,
)

__all__ = ["generate_static", "generate_temporal", "generate_paired", "pair_datasets"]

logger = logging.getLogger(__name__)


def _meta(spec: dict, stream: PrngStream, **extra) -> dict:
    return dict(spec=spec, spec_hash=canonical_hash(spec), seed=stream.seed, **extra)


def _check_dims(d: int, mixing: MixingSpec, envs: EnvironmentSpec):
    if mixing.d != d:
        raise DagError(f"Mixing expects {mixing.d} latents, the model has {d}")
    if envs.d != d:
        raise DagError(f"Environments modulate {envs.d} latents, the model has {d}")


def _solve_static(
    scm: ScmSpec,
    eps: np.ndarray,
    u: np.ndarray,
    envs: EnvironmentSpec,
    intervention: Optional[InterventionSpec] = None,
) -> np.ndarray:
    """Evaluate the structural equations in topological order for given noise"""
    z = np.zeros_like(eps)
    eps = eps * envs.noise_scale[u]
    hard = set()
    if intervention is not None and not intervention.null:
        if any(not 0 <= i < scm.d for i in intervention.targets):
            raise DagError(f"Intervention targets out of range for {scm.d} nodes")
        if intervention.kind == "do_value":
            hard = set(intervention.targets)
        else:
            eps = eps.copy()
            eps[:, list(intervention.targets)] += intervention.value
    for j in scm.dag.order:
        if j in hard:
            z[:, j] = intervention.value  # type: ignore[union-attr]
            continue
        z[:, j] = envs.weight_scale[u, j] * scm.mechanisms.evaluate(j, z) + eps[:, j]
    return z


def generate_static(
    scm: ScmSpec,
    mixing: MixingSpec,
    envs: Optional[EnvironmentSpec],
    n_per_env: int,
    stream: PrngStream,
) -> Dataset:
    """Sample `n_per_env` observations in each environment"""
    envs = envs or EnvironmentSpec.single(scm.d)
    _check_dims(scm.d, mixing, envs)
    u = np.repeat(np.arange(envs.env_count), n_per_env)
    eps = sample_noise(scm.mechanisms.noise, (u.size, scm.d), stream)
    z = _solve_static(scm, eps, u, envs)
    x = mixing(z)
    spec = {
        "kind": "static",
        "scm": scm.to_dict(),
        "mixing": mixing.to_dict(),
        "envs": envs.to_dict(),
    }
    ds = Dataset(
        z[:, None, :],
        x[:, None, :],
        u,
        _meta(spec, stream, env_count=envs.env_count, instantaneous=False),
    )
    logger.debug("Generated static dataset %s", ds.summary())
    return ds


def generate_temporal(
    tscm: TemporalScmSpec,
    episodes: int,
    T: int,
    stream: PrngStream,
    mixing: Optional[MixingSpec] = None,
    envs: Optional[EnvironmentSpec] = None,
    init_scale: float = 1.0,
) -> Dataset:
    """Sample `episodes` sequences of length `T`.

    The first ``L`` steps are drawn from ``N(0, init_scale² I)``; later steps
    read their delayed parents from the previous ``L`` steps and resolve the
    instantaneous parents in topological order. Episode ``e`` lives in
    environment ``e mod env_count``.
    """
    d, L = tscm.d, tscm.lag
    if T <= L:
        raise DagError(f"T = {T} must exceed the lag {L}")
    if not tscm.instantaneous_enabled and tscm.base.n_edges:
        raise DagError("Instantaneous edges present while they are disabled")
    mixing = mixing or MixingSpec.identity(d)
    envs = envs or EnvironmentSpec.single(d)
    _check_dims(d, mixing, envs)

    u = np.arange(episodes) % envs.env_count
    z = np.zeros((episodes, T, d))
    z[:, :L] = init_scale * stream.draw("standard_normal", (episodes, L, d)).numpy()
    eps = sample_noise(tscm.mechanisms.noise, (episodes, T, d), stream)
    eps = eps * envs.noise_scale[u][:, None, :]

    inputs = np.zeros((episodes, (L + 1) * d))
    for t in range(L, T):
        for lag in range(L):
            inputs[:, lag * d : (lag + 1) * d] = z[:, t - lag - 1]
        inputs[:, L * d :] = 0.0
        for j in tscm.base.order:
            value = tscm.mechanisms.evaluate(j, inputs)
            z[:, t, j] = envs.weight_scale[u, j] * value + eps[:, t, j]
            inputs[:, L * d + j] = z[:, t, j]

    x = mixing(z.reshape(-1, d)).reshape(episodes, T, mixing.n)
    spec = {
        "kind": "temporal",
        "tscm": tscm.to_dict(),
        "mixing": mixing.to_dict(),
        "envs": envs.to_dict(),
        "init_scale": init_scale,
    }
    ds = Dataset(
        z,
        x,
        u,
        _meta(
            spec,
            stream,
            env_count=envs.env_count,
            lag=L,
            instantaneous=tscm.instantaneous_enabled,
        ),
    )
    logger.debug("Generated temporal dataset %s", ds.summary())
    return ds


def generate_paired(
    scm: ScmSpec,
    mixing: MixingSpec,
    intervention: InterventionSpec,
    n: int,
    stream: PrngStream,
) -> Tuple[Dataset, Dataset, list]:
    """Observational and interventional views sharing their exogenous noise.

    Returns both views and the invariant coordinates, which agree bitwise
    across them.
    """
    envs = EnvironmentSpec.single(scm.d)
    _check_dims(scm.d, mixing, envs)
    u = np.zeros(n, dtype=int)
    eps = sample_noise(scm.mechanisms.noise, (n, scm.d), stream)
    z1 = _solve_static(scm, eps, u, envs)
    z2 = _solve_static(scm, eps, u, envs, intervention)
    targets = [] if intervention.null else list(intervention.targets)
    A = invariant_set(scm.dag, targets)
    base = {"scm": scm.to_dict(), "mixing": mixing.to_dict()}
    views = []
    for name, z in (("observational", z1), ("interventional", z2)):
        spec = dict(base, kind="paired", view=name, intervention=intervention.to_dict())
        views.append(
            Dataset(
                z[:, None, :],
                mixing(z)[:, None, :],
                u,
                _meta(spec, stream, env_count=1, instantaneous=False),
                invariant=A,
            )
        )
    return views[0], views[1], A


def pair_datasets(v1: Dataset, v2: Dataset, invariant: list) -> Dataset:
    """Single dataset holding both views, as used to train with the
    invariance constraint."""
    if v1.z_true.shape != v2.z_true.shape:
        raise DagError("Paired views must have the same shape")
    spec = {"kind": "pair", "views": [v1.meta.get("spec"), v2.meta.get("spec")]}
    meta = dict(
        spec=spec,
        spec_hash=canonical_hash(spec),
        seed=v1.meta.get("seed"),
        env_count=1,
        instantaneous=False,
    )
    return Dataset(
        v1.z_true, v1.x_obs, v1.u, meta, v2.z_true, v2.x_obs, list(invariant)
    )

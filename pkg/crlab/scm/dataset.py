"""
`Dataset` bundles ground-truth latents, observations and environment labels.

Arrays are ``episodes × time × dim``; static data has ``time == 1``. Paired
(interventional) data additionally carries the second view and the invariant
coordinate set.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np
from astropy.io import registry

from crlab.utils.container import (
    CorruptFileError,
    is_container,
    read_container,
    write_container,
)
from crlab.utils.files import PathLike, canonical_hash

from .graphs import DagError

__all__ = ["Dataset", "save_dataset", "load_dataset"]

logger = logging.getLogger(__name__)


@dataclass
class Dataset:
    """
    :param z_true: ``episodes × T × D`` latent causal variables
    :param x_obs: ``episodes × T × n`` observations
    :param u: Environment index of each episode
    :param meta: ``spec`` description, its ``spec_hash`` and the ``seed``
    """

    z_true: np.ndarray
    x_obs: np.ndarray
    u: np.ndarray
    meta: Dict[str, Any] = field(default_factory=dict)
    z_pair: Optional[np.ndarray] = None
    x_pair: Optional[np.ndarray] = None
    invariant: Optional[List[int]] = None

    def __post_init__(self):
        self.z_true = np.asarray(self.z_true, dtype=float)
        self.x_obs = np.asarray(self.x_obs, dtype=float)
        self.u = np.asarray(self.u).astype(int)
        if self.z_true.ndim != 3 or self.x_obs.ndim != 3:
            raise DagError("z_true and x_obs must be episodes × time × dim")
        if self.z_true.shape[:2] != self.x_obs.shape[:2]:
            raise DagError(
                f"Inconsistent shapes {self.z_true.shape} and {self.x_obs.shape}"
            )
        if self.u.shape != (self.episodes,):
            raise DagError("u needs one environment index per episode")
        for name in ("z_pair", "x_pair"):
            value = getattr(self, name)
            if value is not None:
                value = np.asarray(value, dtype=float)
                ref = self.z_true if name == "z_pair" else self.x_obs
                if value.shape != ref.shape:
                    raise DagError(f"{name} must have shape {ref.shape}")
                setattr(self, name, value)

    @property
    def episodes(self) -> int:
        return self.z_true.shape[0]

    @property
    def T(self) -> int:
        return self.z_true.shape[1]

    @property
    def d(self) -> int:
        return self.z_true.shape[2]

    @property
    def n(self) -> int:
        return self.x_obs.shape[2]

    @property
    def paired(self) -> bool:
        return self.x_pair is not None

    @property
    def env_count(self) -> int:
        if "env_count" in self.meta:
            return int(self.meta["env_count"])
        return int(self.u.max()) + 1 if self.u.size else 1

    def summary(self) -> Dict[str, Any]:
        return {
            "episodes": self.episodes,
            "T": self.T,
            "d": self.d,
            "n": self.n,
            "env_count": self.env_count,
            "paired": self.paired,
            "spec_hash": self.meta.get("spec_hash"),
            "seed": self.meta.get("seed"),
            "instantaneous": self.meta.get("instantaneous"),
        }

    def write(self, path: PathLike) -> None:
        save_dataset(path, self)

    @classmethod
    def read(cls, path: PathLike, format: str = "crl") -> "Dataset":
        return registry.read(cls, path, format=format)


def save_dataset(path: PathLike, ds: Dataset) -> None:
    arrays = {"z_true": ds.z_true, "x_obs": ds.x_obs, "u": ds.u.astype(float)}
    if ds.paired:
        arrays["z_pair"] = ds.z_pair  # type: ignore[assignment]
        arrays["x_pair"] = ds.x_pair  # type: ignore[assignment]
    meta = dict(ds.meta, invariant=ds.invariant)
    write_container(path, arrays, meta)
    logger.debug("Wrote dataset %s to %s", ds.summary(), path)


def load_dataset(path: PathLike) -> Dataset:
    """
    :raises CorruptFileError: The stored spec does not match its hash
    """
    container = read_container(path)
    meta = dict(container.meta)
    invariant = meta.pop("invariant", None)
    spec = meta.get("spec")
    if spec is not None and canonical_hash(spec) != meta.get("spec_hash"):
        raise CorruptFileError(f"{path} spec hash mismatch")
    a = container.arrays
    try:
        return Dataset(
            a["z_true"],
            a["x_obs"],
            a["u"],
            meta,
            a.get("z_pair"),
            a.get("x_pair"),
            invariant,
        )
    except (KeyError, DagError) as err:
        raise CorruptFileError(f"{path} is not a dataset: {err}") from err


def _crl_identifier(origin, path, fileobj, *args, **kwargs):
    return isinstance(path, str) and (path.endswith(".crl") or is_container(path))


registry.register_identifier("crl", Dataset, _crl_identifier)
registry.register_reader("crl", Dataset, load_dataset)

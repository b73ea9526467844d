"""
Synthetic structural causal models: ground-truth latents, observations and
interventions.

>>> from crlab.tensor import PrngStream
>>> from crlab.scm import sample_dag
>>> sample_dag(3, 1.0, PrngStream(0)).n_edges
3
"""

from .dataset import Dataset, load_dataset, save_dataset
from .generate import generate_paired, generate_static, generate_temporal, pair_datasets
from .graphs import (
    DagError,
    DagSpec,
    descendants,
    has_cycle,
    invariant_set,
    sample_dag,
    topological_order,
)
from .mechanisms import (
    EnvironmentSpec,
    InterventionSpec,
    MechanismSpec,
    MixingSpec,
    NoiseSpec,
    ScmSpec,
    TemporalScmSpec,
    sample_environments,
    sample_mechanisms,
    sample_noise,
    sample_scm,
    sample_temporal_scm,
)

__all__ = [
    "DagError",
    "DagSpec",
    "has_cycle",
    "topological_order",
    "sample_dag",
    "descendants",
    "invariant_set",
    "NoiseSpec",
    "MechanismSpec",
    "ScmSpec",
    "TemporalScmSpec",
    "MixingSpec",
    "EnvironmentSpec",
    "InterventionSpec",
    "sample_mechanisms",
    "sample_scm",
    "sample_temporal_scm",
    "sample_environments",
    "sample_noise",
    "Dataset",
    "save_dataset",
    "load_dataset",
    "generate_static",
    "generate_temporal",
    "generate_paired",
    "pair_datasets",
]

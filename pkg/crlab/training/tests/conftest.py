import pytest

from crlab.constraints import ConstraintSpec
from crlab.training import (
    DataSpec,
    EvalSpec,
    ExperimentConfig,
    ModelSpec,
    ObjectiveSpec,
    RunSpec,
)

TDRL_CONSTRAINTS = (
    ConstraintSpec("temporal_prior"),
    ConstraintSpec("latent_recon"),
    ConstraintSpec("delta_match"),
)


def static_config(objective=None, steps=5, **data) -> ExperimentConfig:
    return ExperimentConfig(
        data=DataSpec(**{"latent_dim": 2, "env_count": 2, "n_per_env": 40, **data}),
        model=ModelSpec(hidden=(8,), proj_dim=4),
        objective=objective or ObjectiveSpec(constraints=[ConstraintSpec("vae_kl")]),
        run=RunSpec(steps=steps, batch=16, log_every=1),
        eval=EvalSpec(max_samples=60),
    )


def temporal_config(objective=None, steps=5) -> ExperimentConfig:
    return ExperimentConfig(
        data=DataSpec(kind="temporal", latent_dim=2, episodes=16, length=4),
        model=ModelSpec(hidden=(8,), feature_dim=4, flow_hidden=(4,)),
        objective=objective
        or ObjectiveSpec(constraints=TDRL_CONSTRAINTS, pipeline="temporal_video"),
        run=RunSpec(steps=steps, batch=8, log_every=1),
        eval=EvalSpec(max_samples=60),
    )


@pytest.fixture
def small_static() -> ExperimentConfig:
    return static_config()


@pytest.fixture
def small_temporal() -> ExperimentConfig:
    return temporal_config()

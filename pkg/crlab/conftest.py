import pytest


def pytest_addoption(parser):
    parser.addoption(
        "--run-slow", action="store_true", default=False, help="run slow tests"
    )


def pytest_collection_modifyitems(config, items):
    if config.getoption("--run-slow"):
        return
    skip = pytest.mark.skip(reason="needs --run-slow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


def _hypothesis_strategies():
    """Hypothesis strategies of the random streams and constraint specs used
    in property tests"""
    from hypothesis import HealthCheck, settings
    from hypothesis.strategies import (
        builds,
        floats,
        integers,
        register_type_strategy,
        sampled_from,
    )

    from crlab.constraints import ConstraintSpec
    from crlab.tensor import PrngStream, Stream

    settings.register_profile(
        "def", suppress_health_check=(HealthCheck.too_slow,), deadline=None
    )
    settings.load_profile("def")

    strat = builds(
        PrngStream,
        integers(0, 2**63),
        sampled_from([int(s) for s in Stream]),
        integers(0, 2**20),
    )
    register_type_strategy(PrngStream, strat)

    strat = builds(
        ConstraintSpec,
        sampled_from(["vae_kl", "l1_sparsity", "target_sparsity", "energy"]),
        weight=floats(0, 10),
        beta=floats(0, 10),
        rho=floats(0.01, 0.5),
    )
    register_type_strategy(ConstraintSpec, strat)


_hypothesis_strategies()

import numpy as np
import pytest

from crlab.constraints import ConstraintSpec
from crlab.tasks import TaskSpec, ViewSpec
from crlab.training import (
    DivergenceError,
    IncompatibleObjectiveError,
    ObjectiveSpec,
    RunStreams,
    build_dataset,
    build_model,
    compose_total_loss,
    sample_batch,
    term_names,
)

from .conftest import TDRL_CONSTRAINTS, static_config, temporal_config


def _evaluate(config, seed=0):
    ds = build_dataset(config.data, config.data_seed)
    model = build_model(config, ds)
    streams = RunStreams.from_seed(seed)
    batch = sample_batch(ds, config.run.batch, streams.batch)
    return compose_total_loss(config.objective, batch, model, 3, streams)


class TestObjectiveSpec:
    def test_temporal_task_on_images(self):
        with pytest.raises(IncompatibleObjectiveError, match="temporal_video"):
            ObjectiveSpec(TaskSpec("next_frame"))

    def test_image_task_on_video(self):
        with pytest.raises(IncompatibleObjectiveError):
            ObjectiveSpec(TaskSpec("cross_view"), pipeline="temporal_video")

    def test_constraint_outside_pipeline(self):
        with pytest.raises(IncompatibleObjectiveError, match="temporal_prior"):
            ObjectiveSpec(constraints=[ConstraintSpec("temporal_prior")])
        with pytest.raises(IncompatibleObjectiveError):
            ObjectiveSpec(constraints=[ConstraintSpec("vq")], pipeline="sparsity_vae")

    def test_repeated_constraint(self):
        with pytest.raises(IncompatibleObjectiveError, match="Repeated"):
            ObjectiveSpec(constraints=[ConstraintSpec("vae_kl")] * 2)

    def test_gates_need_prior(self):
        with pytest.raises(IncompatibleObjectiveError, match="mechanism_sparsity"):
            ObjectiveSpec(
                constraints=[ConstraintSpec("mechanism_sparsity")],
                pipeline="temporal_video",
            )

    def test_contrastive_needs_two_views(self):
        with pytest.raises(IncompatibleObjectiveError, match="two views"):
            ObjectiveSpec(TaskSpec("contrastive", view=ViewSpec("identity")))

    def test_prefix_views(self):
        with pytest.raises(IncompatibleObjectiveError):
            ObjectiveSpec(
                TaskSpec("autoregressive", view=ViewSpec("prefix")),
                pipeline="temporal_video",
            )

    def test_lookup(self):
        spec = ObjectiveSpec(constraints=[ConstraintSpec("energy", weight=0.5)])
        assert spec.constraint("energy").weight == 0.5
        assert spec.constraint("vae_kl") is None
        assert ObjectiveSpec().constraint_label == "none"


class TestTermNames:
    def test_tdrl(self):
        spec = ObjectiveSpec(constraints=TDRL_CONSTRAINTS, pipeline="temporal_video")
        assert term_names(spec) == ["task", "init_kl", "future_kl", "latent", "delta"]

    def test_none_is_skipped(self):
        kinds = [ConstraintSpec("none"), ConstraintSpec("vib")]
        spec = ObjectiveSpec(constraints=kinds)
        assert term_names(spec) == ["task", "vib"]


STATIC_OBJECTIVES = [
    ObjectiveSpec(
        constraints=[ConstraintSpec("vae_kl"), ConstraintSpec("l1_sparsity")]
    ),
    ObjectiveSpec(constraints=[ConstraintSpec("capacity_kl", c_max=2.0, t_stop=10)]),
    ObjectiveSpec(constraints=[ConstraintSpec("energy", learned=True)]),
    ObjectiveSpec(constraints=[ConstraintSpec("vq", codebook=4)]),
    ObjectiveSpec(constraints=[ConstraintSpec("cond_prior_static", weight=0.3)]),
    ObjectiveSpec(
        TaskSpec("denoising"), [ConstraintSpec("target_sparsity", weight=0.1)]
    ),
    ObjectiveSpec(TaskSpec("contrastive"), [ConstraintSpec("vae_kl", beta=4.0)]),
    ObjectiveSpec(TaskSpec("cross_view"), [ConstraintSpec("vib", beta=0.1)]),
    ObjectiveSpec(TaskSpec("prototype", sinkhorn=True, prototypes=3)),
    ObjectiveSpec(TaskSpec("target_pred"), [ConstraintSpec("vib")]),
    ObjectiveSpec(TaskSpec("transform_correct")),
    ObjectiveSpec(
        TaskSpec("multi_view"),
        [ConstraintSpec("vae_kl"), ConstraintSpec("jacobian_sparsity", weight=0.01)],
        pipeline="sparsity_vae",
    ),
]


class TestComposeTotalLoss:
    @pytest.mark.parametrize("objective", STATIC_OBJECTIVES)
    def test_breakdown_sums_to_total(self, objective):
        total, terms = _evaluate(static_config(objective))
        assert list(terms) == term_names(objective)
        assert np.isfinite(total.item())
        assert sum(t.item() for t in terms.values()) == pytest.approx(
            total.item(), abs=1e-12
        )

    def test_temporal_breakdown(self, small_temporal):
        total, terms = _evaluate(small_temporal)
        assert set(terms) == {"task", "latent", "delta", "init_kl", "future_kl"}
        assert sum(t.item() for t in terms.values()) == pytest.approx(
            total.item(), abs=1e-12
        )

    @pytest.mark.parametrize(
        "task", ["next_frame", "mid_latent", "masked", "contrastive", "prototype"]
    )
    def test_temporal_tasks(self, task):
        view = ViewSpec("mask") if task == "masked" else ViewSpec("identity")
        objective = ObjectiveSpec(
            TaskSpec(task, view=view), TDRL_CONSTRAINTS, "temporal_video"
        )
        total, terms = _evaluate(temporal_config(objective))
        assert np.isfinite(total.item())
        assert list(terms) == term_names(objective)

    def test_task_only(self):
        objective = ObjectiveSpec(
            constraints=[
                ConstraintSpec("vae_kl", weight=0.0),
                ConstraintSpec("l1_sparsity", weight=0.0),
            ]
        )
        total, terms = _evaluate(static_config(objective))
        assert total.item() == terms["task"].item()

    def test_task_weight(self):
        one = _evaluate(static_config(ObjectiveSpec(TaskSpec(weight=1.0))))[1]
        two = _evaluate(static_config(ObjectiveSpec(TaskSpec(weight=2.0))))[1]
        assert two["task"].item() == pytest.approx(2 * one["task"].item(), rel=1e-12)

    def test_divergence_names_term(self):
        config = static_config(
            ObjectiveSpec(constraints=[ConstraintSpec("cond_prior_static")])
        )
        ds = build_dataset(config.data, config.data_seed)
        model = build_model(config, ds)
        model.prior.logvar.weight.data[:] = np.nan
        streams = RunStreams.from_seed(0)
        batch = sample_batch(ds, 8, streams.batch)
        with pytest.raises(DivergenceError, match="cond_prior_static") as info:
            compose_total_loss(config.objective, batch, model, 7, streams)
        assert info.value.term == "cond_prior_static"
        assert info.value.step == 7

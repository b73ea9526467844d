"""
Objectives: one task loss plus weighted latent constraints,

``L = λ_task · L_task + Σ_i λ_i · Ω_i``

evaluated on a mini-batch by `compose_total_loss`. The pipeline fixes the
model layout: ``static_image`` and ``sparsity_vae`` encode single
observations, ``temporal_video`` encodes sequences through frame features and
a transition decoder.

>>> from crlab.tasks import TaskSpec
>>> ObjectiveSpec(TaskSpec("next_frame"), pipeline="static_image")
Traceback (most recent call last):
...
crlab.training.objective.IncompatibleObjectiveError: next_frame needs the \
temporal_video pipeline
"""

import logging
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Dict, Iterator, List, Literal, Optional, Tuple

import numpy as np

from crlab.constraints import (
    ConstraintSpec,
    aux_latent_and_delta,
    capacity_kl,
    cond_prior_static_kl,
    decoder_jacobian_l1,
    energy_penalty,
    invariance_penalty,
    kl_standard_gaussian,
    mechanism_sparsity,
    sparsity_penalties,
    style_gaussian,
    temporal_prior_terms,
)
from crlab.nets import reparameterize
from crlab.tasks import (
    TaskSpec,
    loss_classification,
    loss_infonce,
    loss_multiview,
    loss_prototype,
    loss_squared_family,
    view_generate,
)
from crlab.tensor import NonFiniteError, Tensor

from .optim import DivergenceError

if TYPE_CHECKING:
    from .data import Batch, RunStreams
    from .model import Model

__all__ = [
    "ObjectiveSpec",
    "IncompatibleObjectiveError",
    "compose_total_loss",
    "PIPELINES",
    "PIPELINE_CONSTRAINTS",
    "TEMPORAL_TASKS",
    "STATIC_TASKS",
    "term_names",
]

logger = logging.getLogger(__name__)

Pipeline = Literal["static_image", "temporal_video", "sparsity_vae"]

PIPELINES = ("static_image", "temporal_video", "sparsity_vae")

_COMMON = frozenset(
    {"none", "vae_kl", "capacity_kl", "l1_sparsity", "target_sparsity", "energy"}
)

#: Constraint kinds each pipeline can evaluate
PIPELINE_CONSTRAINTS = {
    "static_image": _COMMON
    | {
        "vib",
        "vq",
        "cond_prior_static",
        "style_gaussian",
        "invariance",
        "jacobian_sparsity",
    },
    "temporal_video": _COMMON
    | {"temporal_prior", "mechanism_sparsity", "latent_recon", "delta_match"},
    "sparsity_vae": _COMMON | {"jacobian_sparsity"},
}

#: Tasks that need sequences
TEMPORAL_TASKS = frozenset({"next_frame", "mid_latent", "autoregressive"})
#: Tasks that need single observations
STATIC_TASKS = frozenset({"cross_view", "multi_view", "transform_correct"})

_PAIRED_TASKS = frozenset({"contrastive", "cross_view"})
_TERM_NAMES = {"latent_recon": ["latent"], "delta_match": ["delta"]}


class IncompatibleObjectiveError(ValueError):
    pass


@dataclass(frozen=True)
class ObjectiveSpec:
    """
    :param task: Task component
    :param constraints: Constraints, each weighted by its own ``weight``
    :param pipeline: Model layout the objective is evaluated on
    :raises IncompatibleObjectiveError: The task or a constraint cannot be
        evaluated on `pipeline`, or a constraint kind is repeated
    """

    task: TaskSpec = field(default_factory=TaskSpec)
    constraints: Tuple[ConstraintSpec, ...] = ()
    pipeline: Pipeline = "static_image"

    def __post_init__(self):
        object.__setattr__(self, "constraints", tuple(self.constraints))
        if self.pipeline not in PIPELINES:
            raise IncompatibleObjectiveError(f"Unknown pipeline {self.pipeline}")
        temporal = self.pipeline == "temporal_video"
        kind = self.task.kind
        if kind in TEMPORAL_TASKS and not temporal:
            raise IncompatibleObjectiveError(
                f"{kind} needs the temporal_video pipeline"
            )
        if kind in STATIC_TASKS and temporal:
            raise IncompatibleObjectiveError(f"{kind} needs single observations")
        self._check_views(temporal)
        kinds = [c.kind for c in self.constraints]
        if len(set(kinds)) != len(kinds):
            raise IncompatibleObjectiveError(f"Repeated constraint kinds {kinds}")
        for k in kinds:
            if k not in PIPELINE_CONSTRAINTS[self.pipeline]:
                raise IncompatibleObjectiveError(
                    f"Constraint {k} is not available in the {self.pipeline} pipeline"
                )
        if "mechanism_sparsity" in kinds and "temporal_prior" not in kinds:
            raise IncompatibleObjectiveError(
                "mechanism_sparsity gates the transition prior of temporal_prior"
            )

    def _check_views(self, temporal: bool):
        task = self.task
        view = task.view.kind
        if view == "prefix":
            raise IncompatibleObjectiveError("Prefix views are not trained")
        two = view in ("two_views", "multi_view")
        if not temporal and (
            task.kind in _PAIRED_TASKS or (task.kind == "prototype" and task.sinkhorn)
        ):
            if not two:
                raise IncompatibleObjectiveError(f"{task.kind} needs two views")
        if task.kind == "multi_view" and not two:
            raise IncompatibleObjectiveError("multi_view needs augmented views")
        if task.kind == "transform_correct" and view != "transform":
            raise IncompatibleObjectiveError("transform_correct needs a transform view")
        if temporal and task.kind == "prototype" and task.sinkhorn:
            raise IncompatibleObjectiveError(
                "Swapped prototype prediction needs single observations"
            )

    def constraint(self, kind: str) -> Optional[ConstraintSpec]:
        for c in self.constraints:
            if c.kind == kind:
                return c
        return None

    @property
    def constraint_label(self) -> str:
        """
        >>> from crlab.constraints import ConstraintSpec
        >>> ObjectiveSpec(constraints=[ConstraintSpec("vae_kl"),
        ...                            ConstraintSpec("energy")]).constraint_label
        'vae_kl+energy'
        """
        kinds = [c.kind for c in self.constraints if c.kind != "none"]
        return "+".join(kinds) or "none"


def term_names(objective: ObjectiveSpec) -> List[str]:
    """Names of the loss terms of `objective`, in breakdown order"""
    names = ["task"]
    for c in objective.constraints:
        if c.kind == "none":
            continue
        if c.kind == "temporal_prior":
            names += ["init_kl", "future_kl"]
        else:
            names += _TERM_NAMES.get(c.kind, [c.kind])
    return names


@contextmanager
def _diverges_as(term: str, step: int) -> Iterator[None]:
    try:
        yield
    except NonFiniteError as err:
        raise DivergenceError(term, step, str(err)) from err


def _noise(streams: "RunStreams", like: Tensor) -> Tensor:
    return streams.reparam.draw("standard_normal", like.shape)


def _content(z: Tensor, c: int) -> Tensor:
    return z if z.shape[-1] == c else z[:, :c]


def compose_total_loss(
    objective: ObjectiveSpec,
    batch: "Batch",
    model: "Model",
    step: int,
    streams: "RunStreams",
) -> Tuple[Tensor, Dict[str, Tensor]]:
    """
    Total loss of `objective` on `batch` and its weighted terms.

    Terms are named after their constraint kind, except ``task``, ``latent``
    and ``delta`` for the feature auxiliaries and ``init_kl`` and
    ``future_kl`` for the two parts of ``temporal_prior``. The total is the
    sum of the terms, in breakdown order.

    :param step: Optimisation step, read by the capacity schedule
    :param streams: Streams of the views, the reparameterisation noise and
        the sampled Jacobian rows
    :raises DivergenceError: A term is not finite
    """
    terms: Dict[str, Tensor] = {}
    if objective.pipeline == "temporal_video":
        _temporal_terms(objective, batch, model, step, streams, terms)
    else:
        _static_terms(objective, batch, model, step, streams, terms)
    total = None
    for value in terms.values():
        total = value if total is None else total + value
    return total, terms


@dataclass
class _StaticPass:
    clean: Tensor
    features: List[Tensor]
    mu: Tensor
    logvar: Tensor
    samples: List[Tensor]
    decoded: List[Tensor]
    meta: object
    vq_loss: Optional[Tensor] = None
    style: Optional[Tensor] = None
    style_logdet: Optional[Tensor] = None


def _static_forward(
    objective: ObjectiveSpec, batch: "Batch", model: "Model", streams: "RunStreams"
) -> _StaticPass:
    x = batch.x[:, 0]
    clean = model.features(Tensor(x))
    view, meta = view_generate(objective.task.view, x, streams.mask)
    features = [model.features(v) for v in (meta.views or [view])]
    posteriors = [model.encoder(f) for f in features]
    samples = [reparameterize(mu, lv, _noise(streams, mu)) for mu, lv in posteriors]
    mu, logvar = posteriors[0]
    out = _StaticPass(clean, features, mu, logvar, samples, samples, meta)
    vq = objective.constraint("vq")
    if vq is not None:
        quantized = [model.codebook(z, vq.beta_commit) for z in samples]
        out.decoded = [q[0] for q in quantized]
        losses = [q[1] for q in quantized]
        out.vq_loss = sum(losses[1:], losses[0]) * (1.0 / len(losses))
    if model.domain_flow is not None:
        c = model.content_dim
        out.style, out.style_logdet = model.domain_flow(samples[0][:, c:], batch.u)
    return out


def _static_task(
    task: TaskSpec, batch: "Batch", model: "Model", fwd: _StaticPass
) -> Tensor:
    kind = task.kind
    if kind in ("reconstruction", "denoising", "masked"):
        # the encoder sees the view, the target is the clean feature
        return loss_squared_family(
            "reconstruction", model.decoder(fwd.decoded[0]), fwd.clean
        )
    if kind == "cross_view":
        preds = (model.decoder(fwd.decoded[0]), model.decoder(fwd.decoded[1]))
        return loss_squared_family(
            "cross_view", preds, (fwd.features[1], fwd.features[0])
        )
    if kind == "multi_view":
        return loss_multiview([model.decoder(z) for z in fwd.decoded], fwd.features)
    content = [_content(z, model.content_dim) for z in fwd.samples]
    if kind == "contrastive":
        return loss_infonce(
            model.projection(content[0]),
            model.projection(content[1]),
            task.temperature,
            symmetric=True,
            stop_grad_keys=False,
        )
    if kind == "prototype":
        other = content[1] if task.sinkhorn else None
        return loss_prototype(content[0], model.prototypes, task, other)
    if kind == "target_pred":
        return loss_classification(model.classifier(content[0]), batch.u)
    if kind == "transform_correct":
        return loss_classification(model.classifier(content[0]), fwd.meta.transform)
    raise IncompatibleObjectiveError(f"{kind} is not a static task")


def _flowed_kl(model: "Model", fwd: _StaticPass) -> Tensor:
    """
    Content part in closed form, style part as a single-sample estimate of
    ``log q(z_s|x) − log N(f_u(z_s)) − log|det J|``.
    """
    c = model.content_dim
    mu, logvar, z = fwd.mu, fwd.logvar, fwd.samples[0]
    content = kl_standard_gaussian(mu[:, :c], logvar[:, :c])
    s_mu, s_lv, s_z = mu[:, c:], logvar[:, c:], z[:, c:]
    log_q = ((s_z - s_mu).square() * (-s_lv).exp() + s_lv).sum(axis=1) * -0.5
    log_p = fwd.style.square().sum(axis=1) * -0.5 + fwd.style_logdet
    return content + (log_q - log_p).mean()


def _static_constraint(
    spec: ConstraintSpec,
    batch: "Batch",
    model: "Model",
    fwd: _StaticPass,
    step: int,
    streams: "RunStreams",
) -> Tensor:
    kind = spec.kind
    z = fwd.samples[0]
    if kind in ("vae_kl", "vib"):
        return kl_standard_gaussian(fwd.mu, fwd.logvar) * spec.beta
    if kind == "capacity_kl":
        if fwd.style is not None:
            kl = _flowed_kl(model, fwd)
        else:
            kl = kl_standard_gaussian(fwd.mu, fwd.logvar)
        return capacity_kl(kl, step, spec.beta, spec.c_max, spec.t_stop)
    if kind in ("l1_sparsity", "target_sparsity"):
        return sparsity_penalties(z, spec)
    if kind == "energy":
        return energy_penalty(z, spec, model.energy)
    if kind == "vq":
        return fwd.vq_loss
    if kind == "cond_prior_static":
        return cond_prior_static_kl(fwd.mu, fwd.logvar, batch.u, model.prior)
    if kind == "style_gaussian":
        if fwd.style is None:
            raise IncompatibleObjectiveError("style_gaussian needs model.style_dim > 0")
        return style_gaussian(fwd.style)
    if kind == "invariance":
        if batch.x_pair is None:
            raise IncompatibleObjectiveError("invariance needs paired data")
        mu_a = model.encoder(fwd.clean)[0]
        mu_b = model.encoder(model.features(Tensor(batch.x_pair[:, 0])))[0]
        subset = spec.subset or model.invariant
        return invariance_penalty(mu_a, mu_b, subset, spec.statistic)
    if kind == "jacobian_sparsity":
        return decoder_jacobian_l1(
            model.decoder,
            fwd.decoded[0],
            spec.jacobian_cap,
            spec.jacobian_rows,
            streams.mask,
        )
    raise IncompatibleObjectiveError(f"{kind} is not a static constraint")


def _static_terms(objective, batch, model, step, streams, terms):
    task = objective.task
    with _diverges_as("task", step):
        fwd = _static_forward(objective, batch, model, streams)
        terms["task"] = _static_task(task, batch, model, fwd) * task.weight
    for spec in objective.constraints:
        if spec.kind == "none":
            continue
        with _diverges_as(spec.kind, step):
            value = _static_constraint(spec, batch, model, fwd, step, streams)
            terms[spec.kind] = value * spec.weight


@dataclass
class _TemporalPass:
    x: Tensor
    h: Tensor
    h_hat: Tensor
    x_hat: Tensor
    mu: Tensor
    logvar: Tensor
    z: Tensor
    meta: object


def _temporal_forward(
    objective: ObjectiveSpec, batch: "Batch", model: "Model", streams: "RunStreams"
) -> _TemporalPass:
    view, meta = view_generate(objective.task.view, batch.x, streams.mask)
    h = model.frame_features(view)
    mu, logvar = model.posterior(h)
    z = reparameterize(mu, logvar, _noise(streams, mu))
    h_hat = model.transition_features(z)
    x_hat = model.observe(h_hat)
    return _TemporalPass(Tensor(batch.x), h, h_hat, x_hat, mu, logvar, z, meta)


def _temporal_task(
    task: TaskSpec, batch: "Batch", model: "Model", fwd: _TemporalPass
) -> Tensor:
    kind = task.kind
    x, x_hat = fwd.x, fwd.x_hat
    if kind in ("reconstruction", "denoising"):
        return loss_squared_family("reconstruction", x_hat, x)
    if kind == "masked":
        return loss_squared_family("masked", x_hat, x, fwd.meta.mask)
    if kind in ("next_frame", "autoregressive"):
        return loss_squared_family(kind, x_hat[:, :-1], x[:, 1:])
    if kind == "mid_latent":
        return loss_squared_family("mid_latent", fwd.h_hat, fwd.h)
    if kind == "contrastive":
        B, T, f = fwd.h.shape
        queries = fwd.h_hat[:, :-1].reshape(B * (T - 1), f)
        keys = fwd.h[:, 1:].reshape(B * (T - 1), f)
        groups = np.repeat(np.arange(B), T - 1) if task.exclude_same_sequence else None
        return loss_infonce(
            queries, keys, task.temperature, symmetric=task.symmetric, groups=groups
        )
    if kind == "prototype":
        return loss_prototype(fwd.z, model.prototypes, task)
    if kind == "target_pred":
        return loss_classification(model.classifier(fwd.z.mean(axis=1)), batch.u)
    raise IncompatibleObjectiveError(f"{kind} is not a temporal task")


def _temporal_terms(objective, batch, model, step, streams, terms):
    task = objective.task
    with _diverges_as("task", step):
        fwd = _temporal_forward(objective, batch, model, streams)
        terms["task"] = _temporal_task(task, batch, model, fwd) * task.weight
    aux = None
    for spec in objective.constraints:
        kind = spec.kind
        if kind == "none":
            continue
        with _diverges_as(kind, step):
            if kind == "temporal_prior":
                edges = model.edges() if model.edges is not None else None
                u = batch.u if model.flow.embed is not None else None
                init, future = temporal_prior_terms(
                    fwd.mu, fwd.logvar, fwd.z, model.flow, u, edges
                )
                terms["init_kl"] = init * (spec.weight * spec.beta_init)
                terms["future_kl"] = future * (spec.weight * spec.gamma_future)
                continue
            if kind in ("latent_recon", "delta_match"):
                aux = aux or aux_latent_and_delta(fwd.h, fwd.h_hat)
                name = _TERM_NAMES[kind][0]
                terms[name] = aux[0 if kind == "latent_recon" else 1] * spec.weight
                continue
            if kind == "mechanism_sparsity":
                value = mechanism_sparsity(model.edges())
            elif kind == "vae_kl":
                value = kl_standard_gaussian(fwd.mu, fwd.logvar) * spec.beta
            elif kind == "capacity_kl":
                kl = kl_standard_gaussian(fwd.mu, fwd.logvar)
                value = capacity_kl(kl, step, spec.beta, spec.c_max, spec.t_stop)
            elif kind in ("l1_sparsity", "target_sparsity"):
                value = sparsity_penalties(fwd.z, spec)
            elif kind == "energy":
                B, T, D = fwd.z.shape
                value = energy_penalty(fwd.z.reshape(B * T, D), spec, model.energy)
            else:
                raise IncompatibleObjectiveError(f"{kind} is not a temporal constraint")
            terms[kind] = value * spec.weight

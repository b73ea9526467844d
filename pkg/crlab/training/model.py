"""
The networks of one experiment, built from its configuration.
"""

import logging
from typing import Optional, Sequence

import numpy as np

from crlab.constraints import (
    Codebook,
    ConditionalPrior,
    EdgeWeights,
    QuadraticEnergy,
)
from crlab.nets import (
    AdditiveDecoder,
    ComponentwiseFlow,
    Decoder,
    DomainFlow,
    FrozenExtractor,
    GaussianEncoder,
    Linear,
    Mlp,
    MlpSpec,
    Module,
    Prototypes,
    history_window,
)
from crlab.tensor import PrngStream, Stream, Tensor

from .config import ExperimentConfig

__all__ = ["Model"]

logger = logging.getLogger(__name__)


class Model(Module):
    """
    Encoder, decoder and every auxiliary network the objective reads.

    Parts the objective does not use are `None`. Static pipelines encode
    (optionally extracted) observations and decode back to them; the temporal
    pipeline maps frames to features ``h_t``, encodes them, and decodes the
    latent history into features ``ĥ_t`` then frames ``x̂_t``.

    :param n_obs: Observation width
    :param env_count: Number of environments of the data
    :param lag: Transition lag of temporal models
    :param extractor_seed: Seed of the frozen backbone
    :param invariant: Invariant coordinates of paired data
    """

    def __init__(
        self,
        config: ExperimentConfig,
        n_obs: int,
        env_count: int = 1,
        lag: int = 1,
        extractor_seed: int = 0,
        invariant: Optional[Sequence[int]] = None,
    ):
        spec = config.model
        objective = config.objective
        task = objective.task
        stream = PrngStream(config.run.seed, Stream.INIT)
        D = config.latent_dim
        hidden, act = spec.hidden, spec.activation
        self.latent_dim = D
        self.lag = lag
        self.temporal = objective.pipeline == "temporal_video"
        self.content_dim = D if self.temporal else D - spec.style_dim
        self.invariant = [int(i) for i in invariant or []]

        self.extractor = self.frames = self.transition = None
        self.flow = self.edges = self.domain_flow = None
        self.prior = self.codebook = self.energy = None
        self.prototypes = self.classifier = self.projection = None

        if self.temporal:
            f = spec.feature_dim
            self.frames = Mlp(MlpSpec((n_obs, *hidden, f), act), stream)
            self.encoder = GaussianEncoder(f, D, stream, hidden, act)
            self.transition = Mlp(MlpSpec(((lag + 1) * D, *hidden, f), act), stream)
            self.decoder = Mlp(MlpSpec((f, *hidden, n_obs), act), stream)
            if objective.constraint("temporal_prior") is not None:
                self.flow = ComponentwiseFlow(
                    D,
                    lag,
                    stream,
                    env_count if env_count > 1 else None,
                    spec.flow_hidden,
                    act,
                )
            if objective.constraint("mechanism_sparsity") is not None:
                self.edges = EdgeWeights(D, lag)
        else:
            f = n_obs
            if spec.extractor:
                self.extractor = FrozenExtractor(
                    n_obs, spec.extractor_dim, extractor_seed
                )
                f = spec.extractor_dim
            self.encoder = GaussianEncoder(f, D, stream, hidden, act)
            if spec.blocks:
                self.decoder = AdditiveDecoder(spec.blocks, f, stream, hidden, act)
            else:
                self.decoder = Decoder(D, f, stream, hidden, act)
            if spec.style_dim:
                self.domain_flow = DomainFlow(spec.style_dim, env_count, stream)
            if objective.constraint("cond_prior_static") is not None:
                self.prior = ConditionalPrior(env_count, D)
            vq = objective.constraint("vq")
            if vq is not None:
                self.codebook = Codebook(vq.codebook, D, stream)

        c = self.content_dim
        energy = objective.constraint("energy")
        if energy is not None and energy.learned:
            self.energy = QuadraticEnergy(D)
        if task.kind == "prototype":
            self.prototypes = Prototypes(
                task.prototypes, c, stream, task.proto_temperature
            )
        elif task.kind == "target_pred":
            self.classifier = Linear(c, env_count, stream)
        elif task.kind == "transform_correct":
            self.classifier = Linear(c, task.view.classes, stream)
        elif task.kind == "contrastive" and not self.temporal:
            width = hidden[-1] if hidden else spec.proj_dim
            self.projection = Mlp(MlpSpec((c, width, spec.proj_dim), act), stream)
        logger.debug(
            "Built %s model with %d trainable parameters",
            objective.pipeline,
            sum(p.size for p in self.parameters().values()),
        )

    def features(self, x: Tensor) -> Tensor:
        """Backbone features of single observations"""
        return self.extractor(x) if self.extractor is not None else x

    def frame_features(self, x: Tensor) -> Tensor:
        B, T, n = x.shape
        out = self.frames(x.reshape(B * T, n))
        return out.reshape(B, T, out.shape[1])

    def posterior(self, h: Tensor):
        B, T, f = h.shape
        mu, logvar = self.encoder(h.reshape(B * T, f))
        D = self.latent_dim
        return mu.reshape(B, T, D), logvar.reshape(B, T, D)

    def transition_features(self, z: Tensor) -> Tensor:
        """``ĥ_t`` decoded from ``[z_{t-L}, ..., z_t]``"""
        B, T, D = z.shape
        window = history_window(z, self.lag).reshape(B * T, (self.lag + 1) * D)
        out = self.transition(window)
        return out.reshape(B, T, out.shape[1])

    def observe(self, h_hat: Tensor) -> Tensor:
        B, T, f = h_hat.shape
        out = self.decoder(h_hat.reshape(B * T, f))
        return out.reshape(B, T, out.shape[1])

    def embed(self, x: np.ndarray) -> np.ndarray:
        """
        Deterministic representation of clean observations ``(N, T, n)``:
        the content part of the posterior mean of static models, the posterior
        mean of every step of temporal ones, flattened to ``(N · T, D)``.
        """
        x = np.asarray(x, dtype=float)
        if self.temporal:
            mu, _ = self.posterior(self.frame_features(Tensor(x)))
            return mu.numpy().reshape(-1, self.latent_dim)
        mu, _ = self.encoder(self.features(Tensor(x[:, 0])))
        return mu.numpy()[:, : self.content_dim]

    def after_step(self):
        if self.prototypes is not None:
            self.prototypes.renormalize()

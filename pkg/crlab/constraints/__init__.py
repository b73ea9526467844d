from .divergences import (
    LOG_2PI,
    ConditionalPrior,
    capacity,
    capacity_kl,
    cond_prior_static_kl,
    kl_standard_gaussian,
    style_gaussian,
    temporal_prior_kl,
    temporal_prior_terms,
)
from .penalties import (
    ENERGY_WEIGHT_DECAY,
    RHO_CLAMP,
    Codebook,
    EdgeWeights,
    QuadraticEnergy,
    aux_latent_and_delta,
    bernoulli_kl,
    decoder_jacobian_l1,
    energy_penalty,
    gated_transition_inputs,
    invariance_penalty,
    l1_sparsity,
    mechanism_sparsity,
    sparsity_penalties,
    vector_quantize,
)
from .specs import CONSTRAINT_KINDS, JACOBIAN_CAP, ConstraintError, ConstraintSpec

__all__ = [
    "ConstraintSpec",
    "ConstraintError",
    "CONSTRAINT_KINDS",
    "JACOBIAN_CAP",
    "kl_standard_gaussian",
    "capacity",
    "capacity_kl",
    "ConditionalPrior",
    "cond_prior_static_kl",
    "style_gaussian",
    "temporal_prior_terms",
    "temporal_prior_kl",
    "LOG_2PI",
    "l1_sparsity",
    "bernoulli_kl",
    "sparsity_penalties",
    "QuadraticEnergy",
    "energy_penalty",
    "Codebook",
    "vector_quantize",
    "decoder_jacobian_l1",
    "invariance_penalty",
    "EdgeWeights",
    "mechanism_sparsity",
    "gated_transition_inputs",
    "aux_latent_and_delta",
    "RHO_CLAMP",
    "ENERGY_WEIGHT_DECAY",
]

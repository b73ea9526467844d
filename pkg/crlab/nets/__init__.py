from .base import (
    ACTIVATIONS,
    Embedding,
    Linear,
    Mlp,
    MlpSpec,
    Module,
    Parameter,
    UnknownEnvironmentError,
)
from .decoders import AdditiveDecoder, Decoder, additive_decode
from .encoders import (
    DEFAULT_HIDDEN,
    LOGVAR_BOUNDS,
    GaussianEncoder,
    encode,
    history_window,
    reparameterize,
)
from .extractor import FrozenExtractor
from .flows import (
    EMBED_DIM,
    ComponentwiseFlow,
    DomainFlow,
    domain_flow_forward,
    gated_transition_inputs,
    temporal_flow_forward,
)
from .prototypes import DEFAULT_TEMPERATURE, Prototypes, l2_normalize, prototype_logits

__all__ = [
    "Module",
    "Parameter",
    "Linear",
    "Mlp",
    "MlpSpec",
    "Embedding",
    "ACTIVATIONS",
    "UnknownEnvironmentError",
    "GaussianEncoder",
    "encode",
    "reparameterize",
    "history_window",
    "LOGVAR_BOUNDS",
    "DEFAULT_HIDDEN",
    "Decoder",
    "AdditiveDecoder",
    "additive_decode",
    "ComponentwiseFlow",
    "DomainFlow",
    "temporal_flow_forward",
    "domain_flow_forward",
    "gated_transition_inputs",
    "EMBED_DIM",
    "Prototypes",
    "prototype_logits",
    "l2_normalize",
    "DEFAULT_TEMPERATURE",
    "FrozenExtractor",
]

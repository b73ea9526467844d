from dataclasses import asdict, dataclass
from typing import Any, Dict, Literal, Optional, Tuple

__all__ = ["ConstraintSpec", "ConstraintError", "CONSTRAINT_KINDS", "JACOBIAN_CAP"]

ConstraintKind = Literal[
    "none",
    "vae_kl",
    "capacity_kl",
    "vib",
    "l1_sparsity",
    "target_sparsity",
    "energy",
    "vq",
    "cond_prior_static",
    "temporal_prior",
    "style_gaussian",
    "jacobian_sparsity",
    "invariance",
    "mechanism_sparsity",
    "latent_recon",
    "delta_match",
]

CONSTRAINT_KINDS = (
    "none",
    "vae_kl",
    "capacity_kl",
    "vib",
    "l1_sparsity",
    "target_sparsity",
    "energy",
    "vq",
    "cond_prior_static",
    "temporal_prior",
    "style_gaussian",
    "jacobian_sparsity",
    "invariance",
    "mechanism_sparsity",
    "latent_recon",
    "delta_match",
)

#: Largest decoder output for which the full Jacobian is computed
JACOBIAN_CAP = 128


class ConstraintError(ValueError):
    pass


@dataclass(frozen=True)
class ConstraintSpec:
    """
    One latent constraint and its weight ``λ`` in the objective.

    :param kind: Constraint name, one of `CONSTRAINT_KINDS`
    :param weight: Factor ``λ`` of the constraint in the objective
    :param beta: KL factor of ``vae_kl``, ``capacity_kl`` and ``vib``
    :param c_max: Final capacity of ``capacity_kl``
    :param t_stop: Step at which the capacity reaches `c_max`
    :param rho: Target activation of ``target_sparsity``
    :param codebook: Number of codes of ``vq``
    :param beta_commit: Commitment factor of ``vq``
    :param beta_init: Factor of the initial-steps KL of ``temporal_prior``
    :param gamma_future: Factor of the transition KL of ``temporal_prior``
    :param subset: Invariant coordinates compared by ``invariance``
    :param statistic: ``identity`` compares the coordinates, ``moments`` their
        batch mean and variance
    :param learned: Learned quadratic energy instead of ``½‖z‖²``
    :param jacobian_cap: Output size above which `jacobian_rows` is required
    :param jacobian_rows: Number of sampled output rows of the Jacobian penalty
    """

    kind: ConstraintKind = "none"
    weight: float = 1.0
    beta: float = 1.0
    c_max: float = 10.0
    t_stop: int = 1000
    rho: float = 0.05
    codebook: int = 16
    beta_commit: float = 0.25
    beta_init: float = 1.0
    gamma_future: float = 1.0
    subset: Tuple[int, ...] = ()
    statistic: Literal["identity", "moments"] = "identity"
    learned: bool = False
    jacobian_cap: int = JACOBIAN_CAP
    jacobian_rows: Optional[int] = None

    def __post_init__(self):
        if self.kind not in CONSTRAINT_KINDS:
            raise ConstraintError(f"Unknown constraint kind {self.kind}")
        object.__setattr__(self, "subset", tuple(int(i) for i in self.subset))
        for name in ("weight", "beta", "c_max", "beta_commit", "beta_init"):
            if getattr(self, name) < 0:
                raise ConstraintError(f"{name} must be nonnegative")
        if self.gamma_future < 0:
            raise ConstraintError("gamma_future must be nonnegative")
        if self.kind == "capacity_kl" and self.t_stop <= 0:
            raise ConstraintError("The capacity schedule needs t_stop > 0")
        if not 0 < self.rho < 1:
            raise ConstraintError(
                f"Target activation must lie in (0, 1), got {self.rho}"
            )
        if self.codebook < 1:
            raise ConstraintError("The codebook needs at least one code")
        if self.statistic not in ("identity", "moments"):
            raise ConstraintError(f"Unknown invariance statistic {self.statistic}")
        if self.jacobian_rows is not None and self.jacobian_rows < 1:
            raise ConstraintError("jacobian_rows must be positive")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

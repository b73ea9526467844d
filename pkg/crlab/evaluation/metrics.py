"""
Identifiability metrics between learned and ground-truth latents.

Learned latents ``Ẑ`` (``n × D̂``) are compared with the true latents ``Z*``
(``n × D``) up to a permutation and per-coordinate invertible maps.

>>> import numpy as np
>>> rng = np.random.default_rng(0)
>>> z = rng.normal(size=(200, 3))
>>> value, assignment = mcc(-2 * z[:, [2, 0, 1]] + 1, z)
>>> round(value, 12), assignment
(1.0, {0: 2, 1: 0, 2: 1})
"""

import logging
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Literal, Optional, Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.stats import rankdata

__all__ = [
    "EvalReport",
    "EvaluationError",
    "correlation_matrix",
    "constant_columns",
    "mcc",
    "r2_per_dimension",
    "r2_score",
    "evaluate",
    "RIDGE_ALPHA",
    "R2_MIN_SAMPLES",
]

logger = logging.getLogger(__name__)

Method = Literal["pearson", "spearman"]
Regressor = Literal["linear_ridge", "none"]

#: Default ridge regularisation of the R² regression
RIDGE_ALPHA = 1e-3
#: Smallest sample count for which R² is computed
R2_MIN_SAMPLES = 20

_CONSTANT_TOL = 1e-12
_MAX_CONDITION = 1e12


class EvaluationError(ValueError):
    pass


def _as_matrix(z, name: str) -> np.ndarray:
    a = np.asarray(z, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2:
        raise EvaluationError(f"{name} must be samples × dimensions, got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise EvaluationError(f"{name} contains non-finite values")
    return a


def constant_columns(z: np.ndarray) -> List[int]:
    """Indices of the columns of `z` with (numerically) zero spread"""
    a = np.asarray(z, dtype=float)
    return np.flatnonzero(a.std(axis=0) <= _CONSTANT_TOL).tolist()


def _pearson(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    ac, bc = a - a.mean(axis=0), b - b.mean(axis=0)
    ss_a, ss_b = (ac * ac).sum(axis=0), (bc * bc).sum(axis=0)
    scale = np.sqrt(np.outer(ss_a, ss_b))
    flat = scale <= _CONSTANT_TOL
    return np.where(flat, 0.0, ac.T @ bc / np.where(flat, 1.0, scale))


def correlation_matrix(z_hat, z_true, method: Method = "pearson") -> np.ndarray:
    """
    ``D̂ × D`` matrix of correlations between each learned and each true
    coordinate.

    Entries involving a constant column are 0, and a warning is logged.

    :raises EvaluationError: Fewer than 3 samples, mismatched sample counts,
        or an unknown method
    """
    a, b = _as_matrix(z_hat, "z_hat"), _as_matrix(z_true, "z_true")
    n = a.shape[0]
    if b.shape[0] != n:
        raise EvaluationError(f"Sample counts differ: {n} and {b.shape[0]}")
    if n < 3:
        raise EvaluationError(f"Correlations need at least 3 samples, got {n}")
    if method == "spearman":
        a, b = rankdata(a, axis=0), rankdata(b, axis=0)
    elif method != "pearson":
        raise EvaluationError(f"Unknown correlation method {method}")
    for name, m in (("learned", a), ("true", b)):
        flat = constant_columns(m)
        if flat:
            logger.warning("Constant %s columns %s have zero correlation", name, flat)
    corr = _pearson(a, b)
    return np.clip(corr, -1.0, 1.0)


def mcc(
    z_hat, z_true, method: Method = "pearson"
) -> Tuple[float, Dict[int, int]]:
    """
    Mean absolute correlation under the best one-to-one assignment of learned
    to true coordinates.

    When ``D̂ > D`` the unassigned learned coordinates are ignored.

    :return: The MCC and the assignment ``{learned: true}``
    """
    corr = np.abs(correlation_matrix(z_hat, z_true, method))
    rows, cols = linear_sum_assignment(corr, maximize=True)
    value = float(corr[rows, cols].mean())
    return value, {int(r): int(c) for r, c in zip(rows, cols)}


def _ridge_fit(x: np.ndarray, y: np.ndarray, alpha: float):
    x_mean, y_mean = x.mean(axis=0), y.mean(axis=0)
    xc, yc = x - x_mean, y - y_mean
    gram = xc.T @ xc + alpha * np.eye(x.shape[1])
    if np.linalg.cond(gram) > _MAX_CONDITION:
        raise EvaluationError(
            "Singular normal equations, use a strictly positive ridge alpha"
        )
    w = np.linalg.solve(gram, xc.T @ yc)
    return w, y_mean - x_mean @ w


def r2_per_dimension(z_hat, z_true, alpha: float = RIDGE_ALPHA) -> np.ndarray:
    """
    Held-out R² of each true coordinate.

    A ridge map ``Ẑ → Z*`` is fitted on the first half of the samples and
    scored on the second half. Values are not clamped.

    :raises EvaluationError: Fewer than `R2_MIN_SAMPLES` samples, a negative
        alpha, or singular normal equations
    """
    a, b = _as_matrix(z_hat, "z_hat"), _as_matrix(z_true, "z_true")
    n = a.shape[0]
    if b.shape[0] != n:
        raise EvaluationError(f"Sample counts differ: {n} and {b.shape[0]}")
    if n < R2_MIN_SAMPLES:
        raise EvaluationError(f"R² needs at least {R2_MIN_SAMPLES} samples, got {n}")
    if alpha < 0:
        raise EvaluationError(f"Ridge alpha must be nonnegative, got {alpha}")
    half = n // 2
    w, bias = _ridge_fit(a[:half], b[:half], alpha)
    pred = a[half:] @ w + bias
    held = b[half:]
    residual = ((held - pred) ** 2).sum(axis=0)
    total = ((held - held.mean(axis=0)) ** 2).sum(axis=0)
    safe = np.where(total > _CONSTANT_TOL, total, 1.0)
    return np.where(total > _CONSTANT_TOL, 1 - residual / safe, 0.0)


def r2_score(
    z_hat,
    z_true,
    regressor: Regressor = "linear_ridge",
    alpha: float = RIDGE_ALPHA,
) -> Optional[float]:
    """Mean held-out R² over the true coordinates, each clamped below at 0.
    `None` when `regressor` is ``none``."""
    if regressor == "none":
        return None
    if regressor != "linear_ridge":
        raise EvaluationError(f"Unknown regressor {regressor}")
    return float(np.clip(r2_per_dimension(z_hat, z_true, alpha), 0.0, 1.0).mean())


@dataclass
class EvalReport:
    """
    :param mcc: Mean absolute correlation under the optimal assignment
    :param r2: Summary R², `None` without regressor
    :param r2_raw: Unclamped held-out R² per true coordinate
    :param corr_matrix: Signed ``D̂ × D`` correlation matrix
    :param assignment: ``{learned: true}`` pairs used by the MCC
    :param ignored: Learned coordinates left out of the assignment
    :param constant: Learned coordinates that were constant on the evaluation set
    """

    mcc: float
    r2: Optional[float]
    r2_raw: List[float]
    corr_matrix: List[List[float]]
    assignment: Dict[int, int]
    method: str = "pearson"
    regressor: str = "linear_ridge"
    alpha: float = RIDGE_ALPHA
    n_eval: int = 0
    heldout: bool = True
    ignored: List[int] = field(default_factory=list)
    constant: List[int] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        d = asdict(self)
        d["assignment"] = {str(k): v for k, v in self.assignment.items()}
        return d

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> "EvalReport":
        d = dict(d)
        d["assignment"] = {int(k): int(v) for k, v in d["assignment"].items()}
        return cls(**d)


def evaluate(
    z_hat,
    z_true,
    method: Method = "pearson",
    regressor: Regressor = "linear_ridge",
    alpha: float = RIDGE_ALPHA,
) -> EvalReport:
    """MCC and R² of learned latents against the truth, with their metadata"""
    a, b = _as_matrix(z_hat, "z_hat"), _as_matrix(z_true, "z_true")
    corr = correlation_matrix(a, b, method)
    value, assignment = mcc(a, b, method)
    raw: List[float] = []
    r2 = None
    if regressor != "none":
        raw = r2_per_dimension(a, b, alpha).tolist()
        r2 = float(np.clip(raw, 0.0, 1.0).mean())
    return EvalReport(
        mcc=value,
        r2=r2,
        r2_raw=raw,
        corr_matrix=corr.tolist(),
        assignment=assignment,
        method=method,
        regressor=regressor,
        alpha=alpha,
        n_eval=a.shape[0],
        ignored=sorted(set(range(a.shape[1])) - set(assignment)),
        constant=constant_columns(a),
    )

"""
Task losses.

Every loss is a scalar `Tensor`, nonnegative, and exactly zero on its
degenerate optimum:

>>> import numpy as np
>>> x = Tensor(np.ones((2, 3)))
>>> loss_squared_family("reconstruction", x, x).item()
0.0
>>> round(loss_infonce(x, x).item(), 6)
0.693147
"""

from typing import Optional, Sequence, Union

import numpy as np
from scipy.special import logsumexp

from crlab.nets import Prototypes, l2_normalize, prototype_logits
from crlab.tensor import ShapeError, Tensor, stop_gradient

from .specs import SQUARED_KINDS, TaskError, TaskSpec

__all__ = [
    "loss_squared_family",
    "loss_infonce",
    "sinkhorn_assign",
    "loss_prototype",
    "loss_classification",
    "loss_soft_classification",
    "loss_multiview",
    "MASK_EPSILON",
    "SINKHORN_EPSILON",
]

#: Added to the masked-count denominator
MASK_EPSILON = 1e-8
#: Entropic regularisation of the balanced assignment
SINKHORN_EPSILON = 0.05

#: Logit offset removing excluded negatives
_EXCLUDED = -1e4

Pair = Sequence[Tensor]


def _squared(pred: Tensor, target: Tensor) -> Tensor:
    """Squared norm over the last axis, averaged over every other axis"""
    if pred.shape != target.shape:
        raise ShapeError("loss_squared_family", [pred.shape, target.shape])
    return (pred - target).square().sum(axis=-1).mean()


def loss_squared_family(
    kind: str,
    pred: Union[Tensor, Pair],
    target: Union[Tensor, Pair],
    mask: Optional[np.ndarray] = None,
) -> Tensor:
    """
    Squared-error task losses.

    ``cross_view`` takes pairs ``(x̂_{1→2}, x̂_{2→1})`` and ``(x_2, x_1)`` and
    averages both directions; ``masked`` only scores the coordinates where
    `mask` is zero; ``mid_latent`` never sends gradients into its target;
    ``autoregressive`` is the unit-variance Gaussian negative log-likelihood
    without its constant.

    :raises TaskError: Unknown kind or missing mask
    :raises ShapeError: Prediction and target shapes differ
    """
    if kind not in SQUARED_KINDS:
        raise TaskError(f"{kind} is not a squared-error task")
    if kind == "cross_view":
        if len(pred) != 2 or len(target) != 2:
            raise TaskError("cross_view needs one prediction and target per view")
        return (_squared(pred[0], target[0]) + _squared(pred[1], target[1])) * 0.5
    if kind == "masked":
        if mask is None:
            raise TaskError("The masked loss needs the view mask")
        if pred.shape != target.shape or np.shape(mask) != pred.shape:
            raise ShapeError("loss_squared_family", [pred.shape, target.shape])
        hidden = 1.0 - np.asarray(mask, dtype=float)
        error = ((pred - target) * Tensor(hidden)).square().sum()
        return error * (1.0 / (hidden.sum() + MASK_EPSILON))
    if kind == "mid_latent":
        target = stop_gradient(target)
    loss = _squared(pred, target)
    return loss * 0.5 if kind == "autoregressive" else loss


def _log_softmax(logits: Tensor) -> Tensor:
    n = logits.shape[0]
    return logits - logits.logsumexp(axis=1).reshape(n, 1).expand(logits.shape)


def _diagonal(matrix: Tensor) -> Tensor:
    return (matrix * Tensor(np.eye(matrix.shape[0]))).sum(axis=1)


def loss_infonce(
    queries: Tensor,
    keys: Tensor,
    temperature: float = 0.1,
    symmetric: bool = False,
    stop_grad_keys: bool = True,
    groups: Optional[np.ndarray] = None,
) -> Tensor:
    """
    Contrastive cross entropy where query ``i`` must pick key ``i`` among all keys.

    :param symmetric: Average with the key-to-query direction
    :param stop_grad_keys: Keys act as fixed targets
    :param groups: Sequence index of each row; other rows of the same
        sequence are left out of the negatives
    :raises TaskError: Fewer than two pairs, or a nonpositive temperature
    """
    n = queries.shape[0]
    if n < 2 or keys.shape[0] != n:
        raise TaskError(f"Contrastive losses need >= 2 aligned pairs, got {n}")
    if temperature <= 0:
        raise TaskError(f"Temperature must be positive, got {temperature}")
    q = l2_normalize(queries, "loss_infonce")
    k = l2_normalize(keys, "loss_infonce")
    if stop_grad_keys:
        k = stop_gradient(k)
    logits = q @ k.T * (1.0 / temperature)
    if groups is not None:
        groups = np.asarray(groups)
        same = (groups[:, None] == groups[None, :]) & ~np.eye(n, dtype=bool)
        logits = logits + Tensor(np.where(same, _EXCLUDED, 0.0))
    loss = (logits.logsumexp(axis=1) - _diagonal(logits)).mean()
    if symmetric:
        back = (logits.T.logsumexp(axis=1) - _diagonal(logits)).mean()
        loss = (loss + back) * 0.5
    return loss


def sinkhorn_assign(
    scores, iters: int = 3, epsilon: float = SINKHORN_EPSILON
) -> Tensor:
    """
    Balanced soft assignment of ``N`` samples to ``K`` prototypes.

    Rows sum to one and columns are pushed towards ``N / K``. The result is a
    constant target, no gradient flows through it.
    """
    if iters < 1:
        raise TaskError("Sinkhorn needs at least one iteration")
    s = scores.numpy() if isinstance(scores, Tensor) else np.asarray(scores, float)
    n, k = s.shape
    log_q = s / epsilon
    log_q = log_q - logsumexp(log_q)
    for _ in range(iters):
        log_q = log_q - logsumexp(log_q, axis=0, keepdims=True) - np.log(k)
        log_q = log_q - logsumexp(log_q, axis=1, keepdims=True) - np.log(n)
    return Tensor(np.exp(log_q) * n)


def loss_classification(logits: Tensor, labels) -> Tensor:
    """
    Mean cross entropy of integer `labels` under `logits`.

    :raises IndexError: A label is out of range
    """
    labels = np.asarray(labels, dtype=int).reshape(-1)
    n, c = logits.shape
    if labels.shape[0] != n:
        raise ShapeError("loss_classification", [logits.shape, labels.shape])
    if labels.size and (labels.min() < 0 or labels.max() >= c):
        raise IndexError(f"Labels must lie in [0, {c}), got {labels.tolist()}")
    onehot = np.zeros((n, c))
    onehot[np.arange(n), labels] = 1.0
    return (logits.logsumexp(axis=1) - (logits * Tensor(onehot)).sum(axis=1)).mean()


def loss_soft_classification(logits: Tensor, targets: Tensor) -> Tensor:
    """Mean cross entropy against soft target distributions"""
    return -(_log_softmax(logits) * stop_gradient(targets)).sum(axis=1).mean()


def _summary(z: Tensor) -> Tensor:
    return z.mean(axis=1) if z.ndim == 3 else z


def loss_prototype(
    z: Tensor,
    protos: Prototypes,
    spec: Optional[TaskSpec] = None,
    z_other: Optional[Tensor] = None,
) -> Tensor:
    """
    Clustering loss against learnable prototypes.

    Without Sinkhorn balancing each representation (the mean over time for
    sequences) is assigned to its nearest prototype and classified into it.
    With balancing, each of the two views predicts the balanced assignment of
    the other.
    """
    spec = spec or TaskSpec("prototype")
    r = _summary(z)
    if not spec.sinkhorn:
        centers = protos.weight.numpy()
        distances = ((r.numpy()[:, None, :] - centers[None]) ** 2).sum(axis=2)
        labels = distances.argmin(axis=1)
        return loss_classification(prototype_logits(protos, r), labels)
    if z_other is None:
        raise TaskError("Swapped prototype prediction needs a second view")
    logits = prototype_logits(protos, r)
    logits_other = prototype_logits(protos, _summary(z_other))
    tau = protos.temperature
    q = sinkhorn_assign(logits.numpy() * tau, spec.sinkhorn_iters)
    q_other = sinkhorn_assign(logits_other.numpy() * tau, spec.sinkhorn_iters)
    return (
        loss_soft_classification(logits, q_other)
        + loss_soft_classification(logits_other, q)
    ) * 0.5


def loss_multiview(predictions: Sequence[Tensor], features: Sequence[Tensor]) -> Tensor:
    """
    Each view's prediction regresses the canonical target, the mean feature of
    all views, treated as a constant.
    """
    if not predictions or len(predictions) != len(features):
        raise TaskError("One prediction per view is needed")
    target = np.mean([f.numpy() for f in features], axis=0)
    total = None
    for pred in predictions:
        term = _squared(pred, Tensor(target))
        total = term if total is None else total + term
    return total * (1.0 / len(predictions))

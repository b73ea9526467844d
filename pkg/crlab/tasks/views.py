"""
View generation: the observed input of a task and its metadata.

Every draw comes from the given stream, so views are a pure function of
``(spec, batch, stream state)``.

>>> import numpy as np
>>> from crlab.tensor import PrngStream, Stream
>>> view, meta = view_generate(ViewSpec("mask", ratio=0.5), np.ones((1, 4)),
...                            PrngStream(0, Stream.MASK))
>>> int((meta.mask == 0).sum())
2
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Union

import numpy as np

from crlab.tensor import PrngStream, Tensor

from .specs import TaskError, ViewSpec

__all__ = ["ViewMeta", "view_generate", "masked_count", "apply_transform"]

logger = logging.getLogger(__name__)

Batch = Union[np.ndarray, Tensor]


@dataclass
class ViewMeta:
    """
    :param mask: Binary visibility mask, ``1`` on observed coordinates
    :param transform: Transformation index of each sample
    :param views: Augmented views, the first one being the returned view
    :param prefix: Number of observed leading steps
    """

    mask: Optional[np.ndarray] = None
    transform: Optional[np.ndarray] = None
    views: List[Tensor] = field(default_factory=list)
    prefix: Optional[int] = None


def masked_count(ratio: float, n: int) -> int:
    """Number of masked coordinates out of `n`, rounded half up"""
    return int(np.floor(ratio * n + 0.5))


def _mask(x: np.ndarray, ratio: float, stream: PrngStream) -> np.ndarray:
    n = x.shape[-1]
    hidden = masked_count(ratio, n)
    with stream.generator() as gen:
        scores = gen.random(x.shape)
    ranks = np.argsort(np.argsort(scores, axis=-1), axis=-1)
    return (ranks >= hidden).astype(float)


def _augment(x: np.ndarray, spec: ViewSpec, stream: PrngStream) -> np.ndarray:
    with stream.generator() as gen:
        jitter = spec.noise * gen.standard_normal(x.shape)
        keep = gen.random(x.shape) >= spec.dropout
    return (x + jitter) * keep


def apply_transform(x: np.ndarray, ids: np.ndarray) -> np.ndarray:
    """
    Apply transformation ``ids[i]`` to the last axis of sample ``i``:
    identity, reversal, negation, or cyclic roll by one.
    """
    out = x.copy()
    for i, t in enumerate(ids):
        if t == 1:
            out[i] = x[i][..., ::-1]
        elif t == 2:
            out[i] = -x[i]
        elif t == 3:
            out[i] = np.roll(x[i], 1, axis=-1)
    return out


def view_generate(spec: ViewSpec, batch: Batch, stream: PrngStream):
    """
    Observed view of `batch` under `spec`.

    :return: The view as a `Tensor` and its `ViewMeta`
    """
    x = batch.numpy() if isinstance(batch, Tensor) else np.asarray(batch, float)
    meta = ViewMeta()
    if spec.kind == "identity":
        out = x
    elif spec.kind == "corrupt":
        out = x + spec.noise * stream.draw("standard_normal", x.shape).numpy()
    elif spec.kind == "mask":
        meta.mask = _mask(x, spec.ratio, stream)
        out = x * meta.mask
    elif spec.kind in ("two_views", "multi_view"):
        count = 2 if spec.kind == "two_views" else spec.views
        meta.views = [Tensor(_augment(x, spec, stream)) for _ in range(count)]
        out = meta.views[0].numpy()
    elif spec.kind == "transform":
        meta.transform = stream.integers(0, spec.classes, size=x.shape[0])
        out = apply_transform(x, meta.transform)
    elif spec.kind == "prefix":
        if x.ndim != 3 or spec.prefix >= x.shape[1]:
            raise TaskError(
                f"A prefix of {spec.prefix} steps needs longer sequences, got {x.shape}"
            )
        meta.prefix = spec.prefix
        out = x[:, : spec.prefix]
    else:
        raise TaskError(f"Unknown view kind {spec.kind}")
    logger.debug("view %s on batch %s", spec.kind, x.shape)
    return Tensor(out), meta

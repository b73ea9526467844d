"""
Counter-based pseudo-random streams.

A `PrngStream` is the triple ``(seed, stream_id, counter)``; every draw is a
pure function of that triple, and advances the counter past the blocks it
consumed. Each consumer (data generation, parameter initialisation, masks,
reparameterisation noise...) owns its own ``stream_id`` so adding draws to one
consumer never shifts another.

>>> a = PrngStream(seed=7, stream_id=Stream.DATA)
>>> b = PrngStream(seed=7, stream_id=Stream.DATA)
>>> x, y = a.draw("standard_normal", (3,)), b.draw("standard_normal", (3,))
>>> bool((x.numpy() == y.numpy()).all())
True
>>> a.counter == b.counter > 0
True
"""

import hashlib
from contextlib import contextmanager
from dataclasses import asdict, dataclass
from enum import IntEnum
from typing import Dict, Iterator, Literal, Sequence, Union

import numpy as np

from .tensor import Tensor

__all__ = ["PrngStream", "Stream", "prng_draw", "derive_seed"]

_MASK64 = (1 << 64) - 1

DrawKind = Literal["uniform01", "standard_normal"]


class Stream(IntEnum):
    """Reserved stream identifiers, one per consumer of randomness"""

    DATA = 1
    INIT = 2
    MASK = 3
    REPARAM = 4
    BATCH = 5
    EXTRACTOR = 6
    EVAL = 7


@dataclass
class PrngStream:
    """Philox stream keyed by ``(seed, stream_id)`` and positioned by `counter`"""

    seed: int
    stream_id: int = 0
    counter: int = 0

    def __post_init__(self):
        for name in ("seed", "stream_id", "counter"):
            value = int(getattr(self, name))
            if not 0 <= value <= _MASK64:
                raise ValueError(f"{name} must fit in 64 unsigned bits, got {value}")
            setattr(self, name, value)

    @contextmanager
    def generator(self) -> Iterator[np.random.Generator]:
        """numpy generator positioned at the current counter; the counter is
        moved past every block consumed inside the context."""
        key = self.seed | (self.stream_id << 64)
        bitgen = np.random.Philox(key=key, counter=self.counter)
        yield np.random.Generator(bitgen)
        self.counter = int(bitgen.state["state"]["counter"][0])

    def draw(self, kind: DrawKind, shape: Union[int, Sequence[int]]) -> Tensor:
        with self.generator() as gen:
            if kind == "uniform01":
                values = gen.random(shape)
            elif kind == "standard_normal":
                values = gen.standard_normal(shape)
            else:
                raise ValueError(f"Unknown draw kind {kind}")
        return Tensor(values)

    def integers(self, low: int, high: int, size=None) -> np.ndarray:
        with self.generator() as gen:
            return gen.integers(low, high, size=size)

    def permutation(self, n: int) -> np.ndarray:
        with self.generator() as gen:
            return gen.permutation(n)

    def spawn(self, stream_id: int) -> "PrngStream":
        """Fresh stream with the same seed and another identifier"""
        return PrngStream(self.seed, stream_id, 0)

    def state(self) -> Dict[str, int]:
        return asdict(self)


def prng_draw(
    stream: PrngStream, kind: DrawKind, shape: Union[int, Sequence[int]]
) -> Tensor:
    """Draw `uniform01` or `standard_normal` values and advance `stream`"""
    return stream.draw(kind, shape)


def derive_seed(*parts: int) -> int:
    """Stable 64-bit seed from a tuple of integers"""
    digest = hashlib.blake2b(
        ",".join(str(int(p)) for p in parts).encode(), digest_size=8
    ).digest()
    return int.from_bytes(digest, "little")

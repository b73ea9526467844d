"""The `tape` module records the primitive operations applied to tensors that
take part in gradient computation.

Recording only happens inside a `Tape` context. Outside of any tape every
primitive is evaluated eagerly and nothing is kept, which is how evaluation
and data generation run.

>>> from crlab.tensor import Tensor
>>> x = Tensor([1.0, 2.0], requires_grad=True)
>>> with Tape() as tape:
...     y = (x * x).sum()
>>> [node.kind for node in tape.nodes]
['leaf', 'mul', 'sum']
>>> y.node_id
2

Recording can be suspended inside a tape with `Tape.paused`, which is what the
backward pass does unless higher order gradients are requested.
"""

from __future__ import annotations

import itertools
from contextlib import contextmanager
from contextvars import ContextVar
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any, Dict, Iterator, List, Optional, Tuple

if TYPE_CHECKING:
    from .tensor import Tensor

__all__ = ["Node", "Tape", "get_tape", "TapeError"]


class TapeError(RuntimeError):
    """
    Raised when a gradient is requested from a tensor that cannot provide it
    (non-scalar root, or root recorded on no tape).
    """


@dataclass
class Node:
    """One recorded operation.

    :param kind: Primitive kind, or ``"leaf"`` for tensors entering the tape
    :param inputs: Node ids of the inputs, `None` for constants
    :param params: Keyword parameters of the primitive
    :param saved: Input tensors followed by the output tensor
    """

    kind: str
    inputs: Tuple[Optional[int], ...] = ()
    params: Dict[str, Any] = field(default_factory=dict)
    saved: Tuple["Tensor", ...] = ()

    @property
    def output(self) -> "Tensor":
        return self.saved[-1]


_CURRENT: ContextVar[Optional["Tape"]] = ContextVar("crlab_tape", default=None)
_SERIALS = itertools.count()


class Tape:
    """Ordered record of operations, in topological order by construction:
    every node is appended after the nodes of its inputs.
    """

    def __init__(self):
        self.nodes: List[Node] = []
        self.recording = True
        self.serial = next(_SERIALS)
        self._token = None

    def __enter__(self) -> "Tape":
        if self._token is not None:
            raise TapeError("A tape can only be entered once at a time")
        self._token = _CURRENT.set(self)
        return self

    def __exit__(self, *exc):
        _CURRENT.reset(self._token)
        self._token = None

    def __len__(self) -> int:
        return len(self.nodes)

    def node_id(self, tensor: "Tensor") -> Optional[int]:
        """Node id of `tensor` on this tape, `None` if it is not recorded here"""
        if tensor._tape is self:
            return tensor._node_id
        return None

    def _attach(self, tensor: "Tensor", node: Node) -> int:
        self.nodes.append(node)
        tensor._tape = self
        tensor._node_id = len(self.nodes) - 1
        return tensor._node_id

    def leaf(self, tensor: "Tensor") -> int:
        """Register a gradient-requiring tensor produced outside this tape."""
        nid = self.node_id(tensor)
        if nid is not None:
            return nid
        return self._attach(tensor, Node("leaf", saved=(tensor,)))

    def record(
        self,
        kind: str,
        inputs: Tuple["Tensor", ...],
        output: "Tensor",
        params: Dict[str, Any],
    ) -> int:
        ids = tuple(self.leaf(t) if t.requires_grad else None for t in inputs)
        return self._attach(output, Node(kind, ids, params, (*inputs, output)))

    @contextmanager
    def paused(self, pause: bool = True) -> Iterator["Tape"]:
        """Suspend recording while inside the context."""
        previous = self.recording
        self.recording = previous and not pause
        try:
            yield self
        finally:
            self.recording = previous


def get_tape() -> Optional[Tape]:
    """Returns the innermost active tape, if any"""
    return _CURRENT.get()

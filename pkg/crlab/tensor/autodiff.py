"""
Reverse-mode gradient computation over a `~crlab.tensor.tape.Tape`.

>>> from crlab.tensor import Tape, Tensor
>>> x = Tensor(3.0, requires_grad=True)
>>> with Tape():
...     y = x * x
...     grads = backward(y)
>>> grads.wrt(x).item()
6.0

Gradient rules are themselves written with primitives, so passing
``create_graph=True`` records the backward pass and the returned gradients
can be differentiated again.
"""

from contextlib import nullcontext
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

from .tape import Tape, TapeError, get_tape
from .tensor import Tensor, get_primitive

__all__ = ["Gradients", "backward", "grad", "jacobian_rows"]


class Gradients(Dict[int, Tensor]):
    """Gradient map keyed by leaf node id"""

    def __init__(self, tape: Tape, grads: Dict[int, Tensor]):
        super().__init__(grads)
        self.tape = tape

    def wrt(self, tensor: Tensor) -> Tensor:
        """Gradient with respect to `tensor`, zeros when it does not reach the root"""
        nid = self.tape.node_id(tensor)
        if nid is None or nid not in self:
            return Tensor(np.zeros(tensor.shape))
        return self[nid]


def _root_tape(root: Tensor) -> Tape:
    if root.shape != ():
        raise TapeError(f"Gradients need a scalar root, got shape {root.shape}")
    tape = root._tape
    if tape is None or root._node_id is None:
        raise TapeError("The root is not recorded on any tape")
    return tape


def _accumulate(root: Tensor, create_graph: bool) -> Dict[int, Tensor]:
    tape = _root_tape(root)
    root_id = root._node_id
    assert root_id is not None

    grads: Dict[int, Tensor] = {root_id: Tensor(1.0)}
    collected: Dict[int, Tensor] = {}

    entered = nullcontext() if get_tape() is tape else tape
    with entered, tape.paused(not create_graph):
        for nid in range(root_id, -1, -1):
            g = grads.pop(nid, None)
            if g is None:
                continue
            collected[nid] = g
            node = tape.nodes[nid]
            if node.kind == "leaf":
                continue
            vjp = get_primitive(node.kind).vjp
            if vjp is None:
                raise TapeError(f"No backward rule for {node.kind}")
            in_grads = vjp(g, node.output, *node.saved[:-1], **node.params)
            for iid, ig in zip(node.inputs, in_grads):
                if iid is None or ig is None:
                    continue
                grads[iid] = grads[iid] + ig if iid in grads else ig
    return collected


def backward(root: Tensor, create_graph: bool = False) -> Gradients:
    """Gradients of the scalar `root` with respect to every leaf it depends on.

    :param root: Scalar tensor recorded on a tape
    :param create_graph: Record the backward pass for higher order gradients
    :raises TapeError: The root is not scalar or was not recorded
    """
    collected = _accumulate(root, create_graph)
    tape = _root_tape(root)
    leaves = {k: v for k, v in collected.items() if tape.nodes[k].kind == "leaf"}
    return Gradients(tape, leaves)


def grad(
    root: Tensor, inputs: Sequence[Tensor], create_graph: bool = False
) -> List[Tensor]:
    """Gradients of `root` with respect to each of `inputs`, leaves or not.

    Inputs that do not influence `root` get a zero gradient.
    """
    collected = _accumulate(root, create_graph)
    tape = _root_tape(root)
    out: List[Tensor] = []
    for t in inputs:
        nid: Optional[int] = tape.node_id(t)
        out.append(
            collected[nid]
            if nid is not None and nid in collected
            else Tensor(np.zeros(t.shape))
        )
    return out


def jacobian_rows(
    outputs: Tensor,
    inputs: Tensor,
    rows: Optional[Iterable[int]] = None,
    create_graph: bool = False,
) -> List[Tensor]:
    """Batched Jacobian of per-sample outputs ``(B, n)`` with respect to
    per-sample inputs ``(B, d)``, one reverse pass per output coordinate.

    Entry ``j`` of the result is the ``(B, d)`` tensor
    ``d outputs[:, j] / d inputs``.
    """
    n = outputs.shape[-1]
    result = []
    for j in range(n) if rows is None else rows:
        (g,) = grad(outputs[:, j].sum(), [inputs], create_graph=create_graph)
        result.append(g)
    return result

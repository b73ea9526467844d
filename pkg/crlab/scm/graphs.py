"""
Directed acyclic graphs over latent causal variables.

``edges[i, j]`` is true when ``i`` is a parent of ``j``.

>>> chain = DagSpec.from_edges(3, [(0, 1), (1, 2)])
>>> descendants(chain, [1])
[1, 2]
>>> invariant_set(chain, [1])
[0]
"""

from dataclasses import dataclass, field
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from crlab.tensor import PrngStream

__all__ = [
    "DagError",
    "DagSpec",
    "has_cycle",
    "topological_order",
    "sample_dag",
    "descendants",
    "invariant_set",
]


class DagError(ValueError):
    pass


def has_cycle(edges: np.ndarray) -> bool:
    """Depth-first search for a back edge"""
    edges = np.asarray(edges, dtype=bool)
    d = edges.shape[0]
    # 0 unvisited, 1 on the current path, 2 done
    state = [0] * d
    for start in range(d):
        if state[start]:
            continue
        stack: List[Tuple[int, Iterable[int]]] = [
            (start, iter(np.flatnonzero(edges[start])))
        ]
        state[start] = 1
        while stack:
            node, children = stack[-1]
            for child in children:
                if state[child] == 1:
                    return True
                if state[child] == 0:
                    state[child] = 1
                    stack.append((child, iter(np.flatnonzero(edges[child]))))
                    break
            else:
                state[node] = 2
                stack.pop()
    return False


def topological_order(edges: np.ndarray) -> List[int]:
    edges = np.asarray(edges, dtype=bool)
    indegree = edges.sum(axis=0).astype(int)
    ready = sorted(np.flatnonzero(indegree == 0).tolist())
    order = []
    while ready:
        node = ready.pop(0)
        order.append(node)
        for child in np.flatnonzero(edges[node]):
            indegree[child] -= 1
            if indegree[child] == 0:
                ready.append(int(child))
    if len(order) != len(edges):
        raise DagError("Graph has a cycle")
    return order


@dataclass
class DagSpec:
    """
    :param d: Number of latent variables
    :param edges: Boolean ``d × d`` adjacency, parent → child
    :param order: Topological permutation of ``range(d)``
    """

    d: int
    edges: np.ndarray
    order: List[int] = field(default_factory=list)

    def __post_init__(self):
        if self.d < 1:
            raise DagError("A DAG needs at least one node")
        self.edges = np.asarray(self.edges, dtype=bool)
        if self.edges.shape != (self.d, self.d):
            raise DagError(f"edges must be {self.d}×{self.d}, got {self.edges.shape}")
        if has_cycle(self.edges):
            raise DagError("edges contain a cycle")
        if len(self.order) == 0:
            self.order = topological_order(self.edges)
        self.order = [int(i) for i in self.order]
        if sorted(self.order) != list(range(self.d)):
            raise DagError("order must be a permutation of the nodes")
        position = np.argsort(self.order)
        parents, children = np.nonzero(self.edges)
        if np.any(position[parents] >= position[children]):
            raise DagError("order is not topological for these edges")

    @classmethod
    def empty(cls, d: int) -> "DagSpec":
        return cls(d, np.zeros((d, d), dtype=bool))

    @classmethod
    def from_edges(cls, d: int, pairs: Iterable[Tuple[int, int]]) -> "DagSpec":
        edges = np.zeros((d, d), dtype=bool)
        for i, j in pairs:
            if not (0 <= i < d and 0 <= j < d):
                raise DagError(f"Edge ({i}, {j}) out of range for {d} nodes")
            edges[i, j] = True
        return cls(d, edges)

    def parents(self, j: int) -> np.ndarray:
        return np.flatnonzero(self.edges[:, j])

    @property
    def n_edges(self) -> int:
        return int(self.edges.sum())

    def to_dict(self) -> dict:
        edges = self.edges.astype(int).tolist()
        return {"d": self.d, "edges": edges, "order": self.order}


def sample_dag(d: int, p_edge: float, stream: PrngStream) -> DagSpec:
    """Random DAG: a random topological order, then every ordered pair
    compatible with it becomes an edge with probability `p_edge`."""
    if not 0 <= p_edge <= 1:
        raise DagError(f"p_edge must lie in [0, 1], got {p_edge}")
    order = stream.permutation(d).tolist()
    coins = stream.draw("uniform01", (d, d)).numpy()
    edges = np.zeros((d, d), dtype=bool)
    for a in range(d):
        for b in range(a + 1, d):
            edges[order[a], order[b]] = coins[a, b] < p_edge
    return DagSpec(d, edges, order)


def _check_targets(dag: DagSpec, targets: Sequence[int]) -> List[int]:
    targets = [int(i) for i in targets]
    for i in targets:
        if not 0 <= i < dag.d:
            raise DagError(f"Node {i} out of range for {dag.d} nodes")
    return targets


def descendants(dag: DagSpec, targets: Sequence[int]) -> List[int]:
    """Targets together with every node reachable from them, sorted"""
    seen = set(_check_targets(dag, targets))
    stack = list(seen)
    while stack:
        for child in np.flatnonzero(dag.edges[stack.pop()]):
            if child not in seen:
                seen.add(int(child))
                stack.append(int(child))
    return sorted(seen)


def invariant_set(dag: DagSpec, targets: Sequence[int]) -> List[int]:
    """Nodes whose mechanism and ancestry are untouched by intervening on `targets`"""
    affected = set(descendants(dag, targets))
    return [i for i in range(dag.d) if i not in affected]

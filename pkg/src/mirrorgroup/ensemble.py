"""Interaction graphs and neighbour-mean observations."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .dynamics import OscillatorState

TOPOLOGY_KINDS = ("complete", "ring", "path", "star")


@dataclass(frozen=True, eq=False)
class Topology:
    """Undirected interaction graph over ``n`` agents (0-based labels)."""
    n: int
    adjacency: np.ndarray
    kind: str = "custom"
    _mean_op: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        a = np.array(self.adjacency, dtype=bool)
        if a.shape != (self.n, self.n):
            raise ValueError(f"adjacency must be {self.n}x{self.n}, got {a.shape}")
        if np.any(np.diag(a)):
            raise ValueError("self-loops are not allowed")
        if not np.array_equal(a, a.T):
            raise ValueError("adjacency must be symmetric")
        deg = a.sum(axis=1)
        if np.any(deg == 0):
            raise ValueError(f"isolated node(s) {np.flatnonzero(deg == 0).tolist()}")
        a.setflags(write=False)
        object.__setattr__(self, "adjacency", a)
        op = a / deg[:, None].astype(float)
        op.setflags(write=False)
        object.__setattr__(self, "_mean_op", op)

    def __eq__(self, other):
        return (isinstance(other, Topology) and self.n == other.n
                and np.array_equal(self.adjacency, other.adjacency))

    def __hash__(self):
        return hash((self.n, self.adjacency.tobytes()))

    @property
    def mean_operator(self) -> np.ndarray:
        """Row-normalised adjacency: ``mean_operator @ x`` gives every agent's neighbour mean."""
        return self._mean_op

    @property
    def degree(self) -> np.ndarray:
        return self.adjacency.sum(axis=1)

    def neighbors(self, k: int) -> np.ndarray:
        return np.flatnonzero(self.adjacency[k])

    def edges(self) -> list[tuple[int, int]]:
        i, j = np.nonzero(np.triu(self.adjacency))
        return list(zip(i.tolist(), j.tolist()))

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence[int]], kind: str = "custom") -> "Topology":
        a = np.zeros((n, n), dtype=bool)
        for i, j in edges:
            if not (0 <= i < n and 0 <= j < n):
                raise ValueError(f"edge ({i}, {j}) out of range for n={n}")
            a[i, j] = a[j, i] = True
        return cls(n, a, kind)

    def permuted(self, perm: Sequence[int]) -> "Topology":
        """Relabel agents so that old agent ``perm[i]`` becomes agent ``i``."""
        perm = np.asarray(perm)
        return Topology(self.n, self.adjacency[np.ix_(perm, perm)], self.kind)


def make_topology(kind: str, n: int, center: int = 0) -> Topology:
    """Build one of the standard graphs.

    Parameters
    ----------
    kind : {"complete", "ring", "path", "star"}
    n : int
        Number of agents, at least 2.
    center : int
        0-based hub index, used by ``"star"`` only.
    """
    if n < 2:
        raise ValueError(f"a group needs at least 2 agents, got n={n}")
    if kind == "complete":
        a = ~np.eye(n, dtype=bool)
        return Topology(n, a, kind)
    if kind == "path":
        return Topology.from_edges(n, [(i, i + 1) for i in range(n - 1)], kind)
    if kind == "ring":
        edges = [(i, (i + 1) % n) for i in range(n)]
        return Topology.from_edges(n, [e for e in edges if e[0] != e[1]], kind)
    if kind == "star":
        if not 0 <= center < n:
            raise ValueError(f"star center {center} out of range for n={n}")
        return Topology.from_edges(n, [(center, j) for j in range(n) if j != center], kind)
    raise ValueError(f"unknown topology kind {kind!r}; expected one of {TOPOLOGY_KINDS}")


@dataclass(frozen=True)
class GroupState:
    states: tuple[OscillatorState, ...]
    t: float = 0.0

    def __post_init__(self):
        if self.t < 0:
            raise ValueError("time must be non-negative")
        object.__setattr__(self, "states", tuple(self.states))

    @property
    def positions(self) -> np.ndarray:
        return np.array([s.x for s in self.states])

    @property
    def velocities(self) -> np.ndarray:
        return np.array([s.v for s in self.states])


def neighbor_mean(g: GroupState, topo: Topology, k: int) -> tuple[float, float]:
    """Mean position and velocity of agent ``k``'s neighbours."""
    if len(g.states) != topo.n:
        raise ValueError(f"group has {len(g.states)} agents, topology expects {topo.n}")
    if not 0 <= k < topo.n:
        raise IndexError(f"agent index {k} out of range")
    nb = topo.neighbors(k)
    xs = [g.states[j].x for j in nb]
    vs = [g.states[j].v for j in nb]
    return sum(xs) / len(nb), sum(vs) / len(nb)


def neighbor_means(x: np.ndarray, v: np.ndarray, topo: Topology) -> tuple[np.ndarray, np.ndarray]:
    """Neighbour means for every agent at once (row k is agent k's view)."""
    op = topo.mean_operator
    return op @ x, op @ v

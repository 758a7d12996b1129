"""Structural causal models over discrete variables.

Adjacency convention used everywhere in this package: ``adj[i][j] is True``
means node j is a parent of node i, i.e. row i lists the parents of i.
Getting this backwards is the classic transposition bug, so helpers below
always speak in terms of "parents of i".
"""

from dataclasses import dataclass

import numpy as np

from .errors import CycleError
from .rng import node_uniform

MAX_NODES = 10


class Dag:
    """Immutable directed acyclic graph with a cached topological order."""

    __slots__ = ("n", "adj", "parents", "topo")

    def __init__(self, adj):
        adj = np.asarray(adj, dtype=bool)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise ValueError("adjacency must be a square matrix")
        n = adj.shape[0]
        if not 1 <= n <= MAX_NODES:
            raise ValueError(f"node count must be in 1..{MAX_NODES}, got {n}")
        if adj.diagonal().any():
            raise CycleError("self-loop in adjacency matrix")
        self.n = n
        self.adj = adj.copy()
        self.adj.flags.writeable = False
        self.parents = tuple(
            tuple(int(j) for j in np.flatnonzero(row)) for row in self.adj
        )
        self.topo = tuple(topological_order(self))

    @classmethod
    def from_edges(cls, n, edges):
        """Build from (parent, child) pairs."""
        adj = np.zeros((n, n), dtype=bool)
        for parent, child in edges:
            adj[child][parent] = True
        return cls(adj)

    def edges(self):
        """All (parent, child) pairs, sorted lexicographically."""
        return sorted((j, i) for i in range(self.n) for j in self.parents[i])

    def children(self, node):
        return tuple(int(i) for i in np.flatnonzero(self.adj[:, node]))

    def num_edges(self):
        return int(self.adj.sum())

    def to_json(self):
        return {"n": self.n, "edges": [list(e) for e in self.edges()]}

    @classmethod
    def from_json(cls, obj):
        return cls.from_edges(obj["n"], obj["edges"])

    def __eq__(self, other):
        return isinstance(other, Dag) and np.array_equal(self.adj, other.adj)

    def __hash__(self):
        return hash((self.n, self.adj.tobytes()))

    def __repr__(self):
        return f"Dag(n={self.n}, edges={self.edges()})"


def topological_order(dag):
    """Kahn's algorithm, lowest node id first among the available nodes.

    For the empty graph this returns the identity order [0, ..., n-1].
    Raises CycleError if the adjacency contains a directed cycle.
    """
    if isinstance(dag, Dag):
        n, adj = dag.n, dag.adj
    else:
        adj = np.asarray(dag, dtype=bool)
        n = adj.shape[0]
    indegree = adj.sum(axis=1).astype(int)  # number of parents per node
    ready = sorted(np.flatnonzero(indegree == 0).tolist())
    order = []
    while ready:
        node = ready.pop(0)
        order.append(node)
        for child in np.flatnonzero(adj[:, node]):
            indegree[child] -= 1
            if indegree[child] == 0:
                # keep ready sorted so the order is deterministic
                lo, hi = 0, len(ready)
                while lo < hi:
                    mid = (lo + hi) // 2
                    if ready[mid] < child:
                        lo = mid + 1
                    else:
                        hi = mid
                ready.insert(lo, int(child))
    if len(order) != n:
        raise CycleError("adjacency matrix contains a directed cycle")
    return order


def descendants(dag, node):
    """Transitive closure of children of node, excluding node itself."""
    if not 0 <= node < dag.n:
        raise ValueError(f"node {node} out of range")
    seen = set()
    frontier = [node]
    while frontier:
        current = frontier.pop()
        for child in dag.children(current):
            if child not in seen:
                seen.add(int(child))
                frontier.append(int(child))
    return seen


@dataclass(frozen=True)
class Perfect:
    """Perfect intervention: clamp one node to a fixed category.

    The clamped node's mechanism is ignored entirely (the edges from its
    parents are cut for the sampled step). Imperfect interventions, which
    would replace a mechanism's conditional distribution instead of
    clamping the value, are deliberately not supported; environments act
    through single-node perfect interventions only.
    """

    node: int
    value: int


@dataclass(frozen=True)
class Scm:
    """A DAG plus one mechanism per node and a noise seed.

    Each mechanism is a callable ``(parent_values, u) -> value`` taking the
    already-sampled parent values (ordered by ascending parent id) and a
    single uniform draw. Mechanisms must consume exactly the parent set
    declared by the dag.
    """

    dag: Dag
    mechanisms: tuple
    noise_seed: int

    def __post_init__(self):
        if len(self.mechanisms) != self.dag.n:
            raise ValueError("need exactly one mechanism per node")


def ancestral_sample(scm, intervention=None, step=0):
    """Sample every node in topological order; returns a list of categories.

    Under a Perfect intervention the target node holds the forced value and
    its own mechanism is never evaluated. Every other node draws its noise
    from the (noise_seed, node, step) substream, so the same node sees the
    same noise whether or not some non-ancestor was intervened on.
    """
    dag = scm.dag
    if intervention is not None and not 0 <= intervention.node < dag.n:
        raise ValueError(f"intervention target {intervention.node} out of range")
    assignment = [0] * dag.n
    for node in dag.topo:
        if intervention is not None and node == intervention.node:
            assignment[node] = intervention.value
            continue
        parent_values = tuple(assignment[p] for p in dag.parents[node])
        u = node_uniform(scm.noise_seed, node, step)
        assignment[node] = scm.mechanisms[node](parent_values, u)
    return assignment

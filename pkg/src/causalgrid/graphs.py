"""Canonical graph families and exhaustive DAG enumeration.

Families follow the usual causal-benchmark taxonomy: chain, collider,
full (acyclic tournament), jungle (balanced binary out-tree) and random
DAGs with a fixed identity topological order.
"""

from dataclasses import dataclass

import numpy as np

from .errors import SizeError
from .rng import SPAWN, substream
from .scm import Dag

KINDS = ("chain", "collider", "full", "jungle", "random")

ENUM_MAX_NODES = 5
# labeled-DAG counts for n = 0..5 (last two frozen from the brute-force
# enumeration in tests)
DAG_COUNTS = (1, 1, 3, 25, 543, 29281)


@dataclass(frozen=True)
class GraphSpec:
    kind: str
    n: int
    edge_prob: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown graph kind {self.kind!r}")
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not 0.0 <= self.edge_prob <= 1.0:
            raise ValueError("edge_prob must be in [0, 1]")

    def to_string(self):
        if self.kind == "random":
            return f"random:{self.n}:{self.edge_prob}:seed={self.seed}"
        return f"{self.kind}:{self.n}"


def parse_graph_spec(text):
    """Parse CLI strings like "chain:5", "full:5", "random:5:0.5:seed=7"."""
    parts = text.strip().split(":")
    kind = parts[0].lower()
    if kind not in KINDS:
        raise ValueError(f"unknown graph kind {kind!r} in {text!r}")
    if len(parts) < 2:
        raise ValueError(f"missing node count in {text!r}")
    n = int(parts[1])
    edge_prob, seed = 0.5, 0
    for extra in parts[2:]:
        if extra.startswith("seed="):
            seed = int(extra[len("seed="):])
        else:
            edge_prob = float(extra)
    return GraphSpec(kind=kind, n=n, edge_prob=edge_prob, seed=seed)


def generate(spec):
    """Deterministically build the Dag described by spec."""
    n = spec.n
    edges = []
    if spec.kind == "chain":
        edges = [(i, i + 1) for i in range(n - 1)]
    elif spec.kind == "collider":
        edges = [(i, n - 1) for i in range(n - 1)]
    elif spec.kind == "full":
        edges = [(i, j) for i in range(n) for j in range(i + 1, n)]
    elif spec.kind == "jungle":
        for i in range(n):
            for child in (2 * i + 1, 2 * i + 2):
                if child < n:
                    edges.append((i, child))
    elif spec.kind == "random":
        rng = substream(spec.seed, SPAWN)
        # identity topological order: candidate edges i -> j for i < j,
        # drawn in fixed row-major order
        for i in range(n):
            for j in range(i + 1, n):
                if rng.random() < spec.edge_prob:
                    edges.append((i, j))
    return Dag.from_edges(n, edges)


def max_chain_length(dag):
    """Edge count of the longest directed path."""
    longest = [0] * dag.n
    for node in dag.topo:
        for parent in dag.parents[node]:
            longest[node] = max(longest[node], longest[parent] + 1)
    return max(longest) if longest else 0


def _is_acyclic_batch(adj):
    """Boolean mask over a (batch, n, n) uint8 array: True where nilpotent."""
    n = adj.shape[1]
    reach = adj.astype(np.uint8)
    power = adj.astype(np.uint8)
    for _ in range(n - 1):
        power = np.minimum(np.matmul(power, adj, dtype=np.uint8), 1)
        reach = np.maximum(reach, power)
    diag = reach[:, np.arange(n), np.arange(n)]
    return ~diag.any(axis=1)


def enumerate_all_dags(n):
    """Yield every labeled DAG on n nodes exactly once, in a fixed order.

    Candidates are all 2^(n(n-1)) off-diagonal 0/1 matrices ordered by
    their bitmask (bit b set means the b-th off-diagonal cell of the
    parent matrix, row-major, holds an edge); cyclic ones are filtered by
    a vectorized nilpotency check.
    """
    if not 1 <= n <= ENUM_MAX_NODES:
        raise SizeError(f"exhaustive enumeration supports n <= {ENUM_MAX_NODES}, got {n}")
    cells = [(i, j) for i in range(n) for j in range(n) if i != j]
    total = 1 << len(cells)
    chunk = 1 << 16
    masks_bits = np.arange(len(cells), dtype=np.uint64)
    for start in range(0, total, chunk):
        stop = min(start + chunk, total)
        codes = np.arange(start, stop, dtype=np.uint64)
        bits = (codes[:, None] >> masks_bits[None, :]) & np.uint64(1)
        batch = np.zeros((stop - start, n, n), dtype=np.uint8)
        for b, (i, j) in enumerate(cells):
            batch[:, i, j] = bits[:, b]
        keep = _is_acyclic_batch(batch)
        for adj in batch[keep]:
            yield Dag(adj.astype(bool))

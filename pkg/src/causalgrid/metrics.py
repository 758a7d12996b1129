"""Ranking metrics, reconstruction error, and structural Hamming distance.

Ranking follows the buffer convention: the N true embeddings double as
the reference buffer, and a sample's rank is one plus the number of
references strictly closer (Euclidean) to its prediction than its own
true embedding is. Ties therefore never worsen a rank, which matters for
symbolic one-hot embeddings where exact ties are common.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RankingBatch:
    predicted: np.ndarray  # (N, d)
    true: np.ndarray       # (N, d); also the reference buffer

    def __post_init__(self):
        if self.predicted.shape != self.true.shape:
            raise ValueError("predicted and true embeddings must share a shape")
        if self.predicted.ndim != 2 or self.predicted.shape[1] == 0:
            raise ValueError("embeddings must be (N, d) with d > 0")


def ranks(batch):
    """Rank of each sample's prediction against the reference buffer."""
    pred = np.asarray(batch.predicted, dtype=np.float64)
    true = np.asarray(batch.true, dtype=np.float64)
    # squared distances preserve the strict ordering
    p2 = (pred**2).sum(axis=1)[:, None]
    t2 = (true**2).sum(axis=1)[None, :]
    d2 = p2 - 2.0 * pred @ true.T + t2
    own = np.diagonal(d2)
    return 1 + (d2 < own[:, None]).sum(axis=1)


def hits_at_1(batch):
    r = ranks(batch)
    return float((r == 1).mean())


def mean_reciprocal_rank(rank_values):
    """Average inverse rank of an explicit rank vector."""
    r = np.asarray(rank_values, dtype=np.float64)
    if r.size == 0 or (r < 1).any():
        raise ValueError("ranks must be a non-empty vector of values >= 1")
    return float((1.0 / r).mean())


def mrr(batch):
    return mean_reciprocal_rank(ranks(batch))


def reconstruction_error(predicted_frames, true_frames):
    """Mean per-pixel binary cross-entropy over [0,1]-normalized frames.

    Exact 0/1 agreement contributes exactly zero; log arguments are floored
    at 1e-12 so disagreement at the extremes stays finite.
    """
    pred = np.asarray(predicted_frames, dtype=np.float64)
    true = np.asarray(true_frames, dtype=np.float64)
    if pred.shape != true.shape:
        raise ValueError("frame stacks must share a shape")
    if pred.max() > 1.0 or true.max() > 1.0:
        pred = pred / 255.0
        true = true / 255.0
    floor = 1e-12
    logp = np.log(np.maximum(pred, floor))
    log1p = np.log(np.maximum(1.0 - pred, floor))
    bce = -(np.where(true > 0, true * logp, 0.0) + np.where(true < 1, (1 - true) * log1p, 0.0))
    return float(bce.mean())


def _pair_status(dag, i, j):
    if dag.adj[j][i]:
        return 1  # i -> j
    if dag.adj[i][j]:
        return 2  # j -> i
    return 0


def shd(learned, truth):
    """Node pairs whose edge status differs; a reversal costs 1."""
    if learned.n != truth.n:
        raise ValueError("graphs must share a node count")
    n = learned.n
    return sum(
        1
        for i in range(n)
        for j in range(i + 1, n)
        if _pair_status(learned, i, j) != _pair_status(truth, i, j)
    )

"""Exact kNN graph with shared-neighbor (Jaccard) edge weights.

Neighbors are exact Euclidean, computed in chunks with ties broken by
index order, so graph construction is deterministic. Edge (i, j) exists
when either point is in the other's neighbor list; its weight is the
Jaccard overlap of the closed neighborhoods (neighbor sets plus the
points themselves), which keeps mutual-neighbor edges alive even when
they share no third neighbor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from ..exceptions import ConfigurationError, DataError


@dataclass
class NeighborGraph:
    adjacency: sparse.csr_matrix  # symmetric, positive weights, zero diagonal
    k: int

    @property
    def n_nodes(self) -> int:
        return self.adjacency.shape[0]

    @property
    def n_edges(self) -> int:
        return self.adjacency.nnz // 2

    def total_weight(self) -> float:
        """Sum of undirected edge weights."""
        return float(self.adjacency.sum()) / 2.0


def exact_knn(embeddings: np.ndarray, k: int, chunk: int = 512) -> np.ndarray:
    """(M, k) neighbor indices, nearest first, index-order tie-breaking."""
    x = np.asarray(embeddings, dtype=np.float64)
    if x.ndim != 2:
        raise DataError(f"embeddings must be (M, N), got {x.shape}")
    m = x.shape[0]
    if m <= k:
        raise ConfigurationError(f"need more than k={k} points, got {m}")
    if not np.isfinite(x).all():
        raise DataError("embeddings contain non-finite values")
    sq = (x * x).sum(axis=1)
    out = np.empty((m, k), dtype=np.int64)
    for start in range(0, m, chunk):
        stop = min(start + chunk, m)
        d2 = sq[start:stop, None] + sq[None, :] - 2.0 * (x[start:stop] @ x.T)
        np.maximum(d2, 0.0, out=d2)
        rows = np.arange(start, stop)
        d2[rows - start, rows] = np.inf  # exclude self
        # stable argsort breaks distance ties by ascending index
        order = np.argsort(d2, axis=1, kind="stable")
        out[start:stop] = order[:, :k]
    return out


def knn_graph(embeddings: np.ndarray, k: int = 8) -> NeighborGraph:
    """Build the Jaccard-weighted undirected graph over exact neighbors."""
    neighbors = exact_knn(embeddings, k)
    m = neighbors.shape[0]

    # closed neighborhoods as a sparse indicator matrix
    cols = np.concatenate([neighbors, np.arange(m)[:, None]], axis=1)
    rows = np.repeat(np.arange(m), k + 1)
    closed = sparse.csr_matrix(
        (np.ones(rows.size, dtype=np.float64), (rows, cols.ravel())), shape=(m, m)
    )
    intersections = (closed @ closed.T).tocsr()

    src = np.repeat(np.arange(m), k)
    dst = neighbors.ravel()
    lo = np.minimum(src, dst)
    hi = np.maximum(src, dst)
    edges = np.unique(np.stack([lo, hi], axis=1), axis=0)
    inter = np.asarray(intersections[edges[:, 0], edges[:, 1]]).ravel()
    union = 2.0 * (k + 1) - inter
    weights = inter / union

    keep = weights > 0
    e = edges[keep]
    w = weights[keep]
    adj = sparse.coo_matrix(
        (np.concatenate([w, w]),
         (np.concatenate([e[:, 0], e[:, 1]]), np.concatenate([e[:, 1], e[:, 0]]))),
        shape=(m, m),
    ).tocsr()
    return NeighborGraph(adjacency=adj, k=k)

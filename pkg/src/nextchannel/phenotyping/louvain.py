"""Modularity-maximizing community detection (Louvain scheme).

Implemented in-package rather than borrowed so the declared determinism
holds: node visit order is a seeded shuffle, move acceptance requires a
strict modularity gain, and equal-gain candidates resolve to the lowest
community id. Self-loop weights use the doubled convention (A_ii carries
twice the internal weight) so degrees and total weight stay consistent
through aggregation.
"""

from __future__ import annotations

from typing import Tuple

import numpy as np
from scipy import sparse

_GAIN_EPS = 1e-12


def modularity(adjacency: sparse.spmatrix, labels: np.ndarray) -> float:
    """Newman modularity of a partition over a symmetric weighted graph."""
    a = sparse.csr_matrix(adjacency)
    labels = np.asarray(labels)
    k = np.asarray(a.sum(axis=1)).ravel()
    two_m = k.sum()
    if two_m == 0:
        return 0.0
    q = 0.0
    for c in np.unique(labels):
        idx = np.where(labels == c)[0]
        sub = a[idx][:, idx]
        s_in = sub.sum()
        s_tot = k[idx].sum()
        q += s_in / two_m - (s_tot / two_m) ** 2
    return float(q)


def _one_level(a: sparse.csr_matrix, rng: np.random.Generator) -> Tuple[np.ndarray, bool]:
    n = a.shape[0]
    k = np.asarray(a.sum(axis=1)).ravel()
    two_m = k.sum()
    if two_m == 0:
        return np.arange(n), False
    comm = np.arange(n)
    comm_tot = k.copy()
    indptr, indices, data = a.indptr, a.indices, a.data
    order = rng.permutation(n)
    improved = False
    moved = True
    while moved:
        moved = False
        for u in order:
            cu = comm[u]
            # weights from u to each neighboring community
            neigh: dict = {}
            for p in range(indptr[u], indptr[u + 1]):
                j = indices[p]
                if j != u:
                    cj = comm[j]
                    neigh[cj] = neigh.get(cj, 0.0) + data[p]
            comm_tot[cu] -= k[u]
            # ascending candidate ids + strict improvement give the
            # lowest-id-wins tie-break; staying put wins ties with movers
            best_c = cu
            best_gain = neigh.get(cu, 0.0) - k[u] * comm_tot[cu] / two_m
            for c in sorted(neigh.keys()):
                if c == cu:
                    continue
                gain = neigh[c] - k[u] * comm_tot[c] / two_m
                if gain > best_gain + _GAIN_EPS:
                    best_gain = gain
                    best_c = c
            comm_tot[best_c] += k[u]
            if best_c != cu:
                comm[u] = best_c
                moved = True
                improved = True
    # densify labels by first occurrence in node order
    first_seen = {}
    nxt = 0
    for c in comm:
        if c not in first_seen:
            first_seen[c] = nxt
            nxt += 1
    out = np.array([first_seen[c] for c in comm], dtype=np.int64)
    return out, improved


def _aggregate(a: sparse.csr_matrix, labels: np.ndarray) -> sparse.csr_matrix:
    n_comm = labels.max() + 1
    s = sparse.csr_matrix(
        (np.ones(len(labels)), (labels, np.arange(len(labels)))),
        shape=(n_comm, a.shape[0]),
    )
    return (s @ a @ s.T).tocsr()


def louvain_communities(adjacency: sparse.spmatrix, seed: int = 0) -> np.ndarray:
    """Cluster labels 0..K-1, deterministic for a given (graph, seed)."""
    a = sparse.csr_matrix(adjacency, dtype=np.float64)
    rng = np.random.default_rng(seed & 0xFFFFFFFFFFFFFFFF)
    labels = np.arange(a.shape[0], dtype=np.int64)
    while True:
        level_labels, improved = _one_level(a, rng)
        if not improved:
            break
        labels = level_labels[labels]
        a = _aggregate(a, level_labels)
        if a.shape[0] == 1:
            break
    # densify in first-occurrence order of the original nodes
    remap = {}
    out = np.empty_like(labels)
    nxt = 0
    for i, c in enumerate(labels):
        if c not in remap:
            remap[c] = nxt
            nxt += 1
        out[i] = remap[c]
    return out

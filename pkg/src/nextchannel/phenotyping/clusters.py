"""Cluster assignments: community detection, unknown rule, subclustering."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from ..exceptions import ConfigurationError
from .knn import NeighborGraph, knn_graph
from .louvain import louvain_communities, modularity


@dataclass
class ClusterAssignment:
    """Per-cell cluster labels; -1 is reserved for unknown."""

    labels: np.ndarray
    k_used: int
    seed: int
    algorithm: dict = field(default_factory=dict)

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.labels.ndim != 1:
            raise ConfigurationError("labels must be a 1-D integer array")
        if (self.labels < -1).any():
            raise ConfigurationError("labels must be >= -1")

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def cluster_ids(self) -> np.ndarray:
        ids = np.unique(self.labels)
        return ids[ids >= 0]

    @property
    def n_clusters(self) -> int:
        return len(self.cluster_ids)

    @property
    def n_unknown(self) -> int:
        return int((self.labels == -1).sum())

    def sizes(self) -> dict:
        return {int(c): int((self.labels == c).sum()) for c in self.cluster_ids}


def community_detect(graph: NeighborGraph, seed: int = 0) -> ClusterAssignment:
    """Louvain communities on the Jaccard-weighted graph (pre-filter)."""
    labels = louvain_communities(graph.adjacency, seed=seed)
    q = modularity(graph.adjacency, labels)
    return ClusterAssignment(
        labels=labels,
        k_used=graph.k,
        seed=seed,
        algorithm={"method": "knn-jaccard-louvain", "modularity": q},
    )


def apply_unknown_rule(assignment: ClusterAssignment, min_size: int = 50) -> ClusterAssignment:
    """Relabel clusters with fewer than ``min_size`` members to -1 and
    renumber survivors densely, largest first (ties by old label).

    Idempotent: applying it twice changes nothing more.
    """
    labels = assignment.labels
    out = np.full_like(labels, -1)
    sizes = [(int((labels == c).sum()), int(c)) for c in np.unique(labels) if c >= 0]
    survivors = sorted(
        [(n, c) for n, c in sizes if n >= min_size], key=lambda t: (-t[0], t[1])
    )
    for new_id, (_, old) in enumerate(survivors):
        out[labels == old] = new_id
    algorithm = dict(assignment.algorithm)
    algorithm["min_cluster_size"] = min_size
    return replace(assignment, labels=out, algorithm=algorithm)


def cluster_embeddings(
    embeddings: np.ndarray,
    k: int = 8,
    seed: int = 0,
    min_size: int = 50,
) -> ClusterAssignment:
    """The full path both feature branches share: exact kNN graph,
    Jaccard weights, Louvain, unknown rule."""
    graph = knn_graph(embeddings, k=k)
    assignment = community_detect(graph, seed=seed)
    return apply_unknown_rule(assignment, min_size=min_size)


def subcluster_min_size(cluster_size: int, total: int, min_size: int = 50, floor: int = 10) -> int:
    """Unknown-rule threshold scaled to the subpopulation."""
    return max(floor, (min_size * cluster_size) // max(total, 1))


@dataclass
class SubclusterResult:
    member_indices: np.ndarray  # positions of the parent cluster's cells
    assignment: ClusterAssignment  # labels over the members
    parent_cluster: int


def subcluster(
    embeddings: np.ndarray,
    assignment: ClusterAssignment,
    cluster_id: int,
    k: int = 8,
    seed: int = 0,
    min_size: Optional[int] = None,
) -> SubclusterResult:
    """Re-run the clustering path on one surviving cluster's members."""
    if cluster_id < 0 or cluster_id not in set(assignment.cluster_ids.tolist()):
        raise ConfigurationError(f"cluster {cluster_id} is not a surviving cluster")
    members = np.where(assignment.labels == cluster_id)[0]
    if len(members) < 2 * k:
        raise ConfigurationError(
            f"cluster {cluster_id} has {len(members)} members, "
            f"too small to subcluster with k={k}"
        )
    if min_size is None:
        min_size = subcluster_min_size(len(members), len(assignment.labels))
    sub = cluster_embeddings(embeddings[members], k=k, seed=seed, min_size=min_size)
    return SubclusterResult(member_indices=members, assignment=sub, parent_cluster=cluster_id)

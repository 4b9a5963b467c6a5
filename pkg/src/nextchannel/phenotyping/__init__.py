from .clusters import (
    ClusterAssignment,
    SubclusterResult,
    apply_unknown_rule,
    cluster_embeddings,
    community_detect,
    subcluster,
    subcluster_min_size,
)
from .confusion import ConfusionMatrix, confusion_matrix, save_confusion_csv
from .heatmap import (
    ClusterHeatmap,
    cluster_activation_heatmap,
    load_heatmap_csv,
    save_heatmap_csv,
)
from .knn import NeighborGraph, exact_knn, knn_graph
from .louvain import louvain_communities, modularity
from .phenotypes import (
    DEFAULT_VOCABULARY,
    UNKNOWN,
    PhenotypeMap,
    load_label_map,
    save_label_map,
    suggest_phenotypes,
)

__all__ = [
    "NeighborGraph",
    "exact_knn",
    "knn_graph",
    "louvain_communities",
    "modularity",
    "ClusterAssignment",
    "community_detect",
    "apply_unknown_rule",
    "cluster_embeddings",
    "subcluster",
    "subcluster_min_size",
    "SubclusterResult",
    "ClusterHeatmap",
    "cluster_activation_heatmap",
    "save_heatmap_csv",
    "load_heatmap_csv",
    "ConfusionMatrix",
    "confusion_matrix",
    "save_confusion_csv",
    "PhenotypeMap",
    "DEFAULT_VOCABULARY",
    "UNKNOWN",
    "suggest_phenotypes",
    "save_label_map",
    "load_label_map",
]

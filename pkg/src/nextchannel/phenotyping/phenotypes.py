"""Cluster -> phenotype naming.

The tool suggests a label per cluster from its strongest marker, but the
authoritative mapping is a human-edited label-map file (YAML key-value,
cluster id -> phenotype name): phenotyping stays an expert decision.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
import yaml

from ..container import atomic_write
from ..exceptions import ConfigurationError
from .clusters import ClusterAssignment
from .heatmap import ClusterHeatmap

DEFAULT_VOCABULARY: Tuple[str, ...] = (
    "MO/DC/NK",
    "tumor",
    "B cells",
    "T cells",
    "progenitors",
    "granulocytes",
    "other",
    "unknown",
)

UNKNOWN = "unknown"


@dataclass
class PhenotypeMap:
    mapping: Dict[int, str]
    vocabulary: Tuple[str, ...] = DEFAULT_VOCABULARY

    def __post_init__(self):
        self.mapping = {int(k): str(v) for k, v in self.mapping.items()}
        vocab = set(self.vocabulary)
        for cid, name in self.mapping.items():
            if vocab and name not in vocab:
                raise ConfigurationError(
                    f"phenotype {name!r} for cluster {cid} not in vocabulary "
                    f"{sorted(vocab)}"
                )

    def phenotype_of(self, cluster_id: int) -> str:
        if cluster_id == -1:
            return UNKNOWN
        if cluster_id not in self.mapping:
            raise ConfigurationError(f"cluster {cluster_id} has no phenotype assigned")
        return self.mapping[cluster_id]

    def apply(self, assignment: ClusterAssignment) -> List[str]:
        """Phenotype per cell; requires a total map over surviving clusters."""
        missing = [c for c in assignment.cluster_ids.tolist() if c not in self.mapping]
        if missing:
            raise ConfigurationError(f"label map missing clusters {missing}")
        return [self.phenotype_of(int(c)) for c in assignment.labels]


def suggest_phenotypes(
    heatmap: ClusterHeatmap, marker_to_phenotype: Optional[Dict[str, str]] = None
) -> Dict[int, str]:
    """Argmax-marker suggestion per cluster; a marker->phenotype dictionary
    turns marker names into vocabulary names when provided."""
    out = {}
    for cid in heatmap.cluster_ids:
        marker = heatmap.argmax_marker(cid)
        out[int(cid)] = (
            marker_to_phenotype.get(marker, marker) if marker_to_phenotype else marker
        )
    return out


def save_label_map(mapping: Dict[int, str], path) -> None:
    data = {int(k): str(v) for k, v in sorted(mapping.items())}
    atomic_write(path, yaml.safe_dump(data, sort_keys=True).encode())


def load_label_map(path, vocabulary: Tuple[str, ...] = ()) -> PhenotypeMap:
    with open(path, "r", encoding="utf-8") as fh:
        raw = yaml.safe_load(fh)
    if not isinstance(raw, dict):
        raise ConfigurationError(f"{path}: label map must be 'cluster_id: phenotype' pairs")
    return PhenotypeMap(mapping={int(k): str(v) for k, v in raw.items()}, vocabulary=tuple(vocabulary))

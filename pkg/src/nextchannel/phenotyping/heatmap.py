"""Per-cluster mean channel contributions (the phenotyping heatmap)."""

from __future__ import annotations

import csv
import io
import warnings
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from ..container import atomic_write
from ..exceptions import ShapeError
from ..data.panel import MarkerPanel
from .clusters import ClusterAssignment


@dataclass
class ClusterHeatmap:
    matrix: np.ndarray  # (K, G) mean contribution of marker g in cluster k
    cluster_ids: List[int]
    marker_names: List[str]

    def row_for(self, cluster_id: int) -> np.ndarray:
        return self.matrix[self.cluster_ids.index(cluster_id)]

    def argmax_marker(self, cluster_id: int) -> str:
        return self.marker_names[int(np.argmax(self.row_for(cluster_id)))]


def cluster_activation_heatmap(
    assignment: ClusterAssignment,
    contributions: np.ndarray,
    panel: Optional[MarkerPanel] = None,
) -> ClusterHeatmap:
    """Entry (k, g) = mean contribution of channel g over cluster k's cells.

    Unknown cells are excluded. An empty surviving cluster set produces an
    empty heatmap with a warning rather than an error.
    """
    contributions = np.asarray(contributions, dtype=np.float64)
    if contributions.ndim != 2 or contributions.shape[0] != len(assignment):
        raise ShapeError(
            f"contributions shape {contributions.shape} does not align with "
            f"{len(assignment)} assigned cells"
        )
    names = (
        panel.to_list() if panel is not None
        else [f"ch{g}" for g in range(contributions.shape[1])]
    )
    if len(names) != contributions.shape[1]:
        raise ShapeError(
            f"panel names {len(names)} != contribution channels {contributions.shape[1]}"
        )
    ids = [int(c) for c in assignment.cluster_ids]
    if not ids:
        warnings.warn("no surviving clusters; heatmap is empty", stacklevel=2)
        return ClusterHeatmap(
            matrix=np.zeros((0, contributions.shape[1])), cluster_ids=[], marker_names=names
        )
    rows = [contributions[assignment.labels == c].mean(axis=0) for c in ids]
    return ClusterHeatmap(matrix=np.stack(rows), cluster_ids=ids, marker_names=names)


def save_heatmap_csv(heatmap: ClusterHeatmap, path, config_hash: Optional[str] = None) -> None:
    buf = io.StringIO()
    if config_hash:
        buf.write(f"# config_hash={config_hash}\n")
    writer = csv.writer(buf)
    writer.writerow(["cluster"] + heatmap.marker_names)
    for cid, row in zip(heatmap.cluster_ids, heatmap.matrix):
        writer.writerow([cid] + [repr(float(v)) for v in row])
    atomic_write(path, buf.getvalue().encode())


def load_heatmap_csv(path) -> ClusterHeatmap:
    with open(path, "r", encoding="utf-8") as fh:
        rows = [line for line in fh if not line.startswith("#")]
    reader = csv.reader(rows)
    header = next(reader)
    names = header[1:]
    ids, mat = [], []
    for row in reader:
        ids.append(int(row[0]))
        mat.append([float(v) for v in row[1:]])
    matrix = np.asarray(mat) if mat else np.zeros((0, len(names)))
    return ClusterHeatmap(matrix=matrix, cluster_ids=ids, marker_names=names)

"""Row-normalized confusion matrices (rediscovery rates)."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from ..container import atomic_write
from ..exceptions import ConfigurationError, ShapeError


@dataclass
class ConfusionMatrix:
    matrix: np.ndarray  # (R, P), each supported row sums to 1
    row_labels: List[str]
    col_labels: List[str]
    row_counts: np.ndarray  # reference support per row
    zero_rows: List[str]  # rows with no support, emitted as all-zero

    def value(self, ref_label: str, pred_label: str) -> float:
        return float(
            self.matrix[self.row_labels.index(ref_label), self.col_labels.index(pred_label)]
        )

    def diagonal(self) -> dict:
        """ref label -> fraction assigned the same label (where shared)."""
        out = {}
        for i, lab in enumerate(self.row_labels):
            if lab in self.col_labels:
                out[lab] = float(self.matrix[i, self.col_labels.index(lab)])
        return out


def confusion_matrix(
    reference: Sequence,
    predicted: Sequence,
    row_order: Optional[Sequence[str]] = None,
    col_order: Optional[Sequence[str]] = None,
    label_map: Optional[dict] = None,
) -> ConfusionMatrix:
    """Entry (i, j): fraction of reference-class-i cells predicted as j.

    Operates on one cell universe (same length, aligned order). When the
    two vocabularies are disjoint a ``label_map`` (predicted -> reference
    vocabulary) must be supplied, otherwise the diagonal would be
    meaningless.
    """
    ref = [str(x) for x in reference]
    pred = [str(x) for x in predicted]
    if len(ref) != len(pred):
        raise ShapeError(f"label vectors differ in length: {len(ref)} vs {len(pred)}")
    if not ref:
        raise ShapeError("empty label vectors")
    if label_map is not None:
        label_map = {str(k): str(v) for k, v in label_map.items()}
        pred = [label_map.get(p, p) for p in pred]
    if not (set(ref) & set(pred)) and label_map is None:
        raise ConfigurationError(
            "reference and predicted vocabularies are disjoint; "
            "supply an explicit label_map"
        )
    row_labels = list(row_order) if row_order else sorted(set(ref))
    if col_order:
        col_labels = list(col_order)
    else:
        extras = sorted(set(pred) - set(row_labels))
        col_labels = [l for l in row_labels if l in set(pred) or True] + extras
        col_labels = list(dict.fromkeys(col_labels))
    ridx = {l: i for i, l in enumerate(row_labels)}
    cidx = {l: i for i, l in enumerate(col_labels)}
    counts = np.zeros((len(row_labels), len(col_labels)), dtype=np.float64)
    for r, p in zip(ref, pred):
        if r in ridx and p in cidx:
            counts[ridx[r], cidx[p]] += 1
    support = counts.sum(axis=1)
    matrix = np.zeros_like(counts)
    zero_rows = []
    for i, label in enumerate(row_labels):
        if support[i] > 0:
            matrix[i] = counts[i] / support[i]
        else:
            zero_rows.append(label)
    return ConfusionMatrix(
        matrix=matrix,
        row_labels=row_labels,
        col_labels=col_labels,
        row_counts=support,
        zero_rows=zero_rows,
    )


def save_confusion_csv(cm: ConfusionMatrix, path, config_hash: Optional[str] = None) -> None:
    buf = io.StringIO()
    if config_hash:
        buf.write(f"# config_hash={config_hash}\n")
    writer = csv.writer(buf)
    writer.writerow(["reference"] + cm.col_labels + ["support"])
    for i, label in enumerate(cm.row_labels):
        writer.writerow(
            [label] + [repr(float(v)) for v in cm.matrix[i]] + [int(cm.row_counts[i])]
        )
    atomic_write(path, buf.getvalue().encode())

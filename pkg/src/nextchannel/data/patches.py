"""Cell records, patch extraction, and the patch dataset container."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from ..container import atomic_write, read_container, write_container
from ..exceptions import (
    ConfigurationError,
    CorruptFileError,
    PanelMismatchError,
    ShapeError,
)
from .images import MultichannelImage
from .panel import MarkerPanel

_KIND = "nextchannel-patches"


@dataclass
class CellRecord:
    cell_id: str
    image_id: str
    row: int
    col: int
    label: Optional[str] = None
    mask_ref: Optional[str] = None

    def to_dict(self) -> dict:
        d = {"cell_id": self.cell_id, "image_id": self.image_id,
             "row": int(self.row), "col": int(self.col)}
        if self.label is not None:
            d["label"] = self.label
        if self.mask_ref is not None:
            d["mask_ref"] = self.mask_ref
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "CellRecord":
        return cls(
            cell_id=str(d["cell_id"]), image_id=str(d["image_id"]),
            row=int(d["row"]), col=int(d["col"]),
            label=d.get("label"), mask_ref=d.get("mask_ref"),
        )


@dataclass
class PatchDataset:
    patches: np.ndarray  # (M, S, S, C) float32
    records: List[CellRecord]
    panel: MarkerPanel

    def __post_init__(self):
        self.patches = np.asarray(self.patches, dtype=np.float32)
        if self.patches.ndim != 4:
            raise ShapeError(f"patches must be (M, S, S, C), got {self.patches.shape}")
        if self.patches.shape[0] != len(self.records):
            raise ShapeError(
                f"{self.patches.shape[0]} patches but {len(self.records)} records"
            )
        if self.patches.shape[-1] != len(self.panel):
            raise PanelMismatchError(
                f"patches have {self.patches.shape[-1]} channels, panel {len(self.panel)}"
            )

    def __len__(self) -> int:
        return self.patches.shape[0]

    @property
    def size(self) -> int:
        return self.patches.shape[1]

    @property
    def labels(self) -> List[Optional[str]]:
        return [r.label for r in self.records]


@dataclass
class ExtractionReport:
    extracted: int = 0
    skipped: List[Tuple[str, str]] = field(default_factory=list)  # (cell_id, reason)


def extract_patch(image: np.ndarray, row: int, col: int, size: int) -> np.ndarray:
    """One (size, size, C) crop covering [row - size/2, row + size/2);
    out-of-image pixels are zero."""
    h, w, c = image.shape
    half = size // 2
    out = np.zeros((size, size, c), dtype=np.float32)
    r0, r1 = row - half, row + half
    c0, c1 = col - half, col + half
    sr0, sr1 = max(r0, 0), min(r1, h)
    sc0, sc1 = max(c0, 0), min(c1, w)
    if sr0 < sr1 and sc0 < sc1:
        out[sr0 - r0 : sr1 - r0, sc0 - c0 : sc1 - c0] = image[sr0:sr1, sc0:sc1]
    return out


def extract_patches(
    image: MultichannelImage,
    centers: Sequence[CellRecord],
    size: int = 32,
) -> Tuple[PatchDataset, ExtractionReport]:
    """Cell-centered crops for every in-bounds center.

    Centers outside the image are skipped and reported, not fatal; centers
    near the border produce zero-padded patches.
    """
    if size % 2 != 0 or size < 12:
        raise ConfigurationError(f"patch size must be even and >= 12, got {size}")
    h, w, _ = image.pixels.shape
    report = ExtractionReport()
    kept: List[CellRecord] = []
    arrays: List[np.ndarray] = []
    for rec in centers:
        if not (0 <= rec.row < h and 0 <= rec.col < w):
            report.skipped.append((rec.cell_id, f"center ({rec.row}, {rec.col}) outside {h}x{w}"))
            continue
        arrays.append(extract_patch(image.pixels, rec.row, rec.col, size))
        kept.append(rec)
    report.extracted = len(kept)
    patches = np.stack(arrays) if arrays else np.zeros((0, size, size, len(image.panel)), np.float32)
    return PatchDataset(patches=patches, records=kept, panel=image.panel), report


def _records_path(path) -> Path:
    return Path(str(path) + ".records.jsonl")


def save_dataset(dataset: PatchDataset, path, config_hash: Optional[str] = None) -> None:
    """Binary tensor container + JSON-lines records sidecar."""
    header = {
        "kind": _KIND,
        "panel": dataset.panel.to_list(),
        "count": len(dataset),
        "size": int(dataset.patches.shape[1]) if len(dataset) else 0,
    }
    if config_hash:
        header["config_hash"] = config_hash
    write_container(path, header, {"patches": dataset.patches})
    lines = "".join(json.dumps(r.to_dict(), sort_keys=True) + "\n" for r in dataset.records)
    atomic_write(_records_path(path), lines.encode())


def load_dataset(path, panel: Optional[MarkerPanel] = None) -> PatchDataset:
    header, tensors = read_container(path)
    if header.get("kind") != _KIND:
        raise CorruptFileError(f"{path}: not a patch dataset")
    file_panel = MarkerPanel.from_names(header["panel"])
    if panel is not None and panel != file_panel:
        raise PanelMismatchError(
            f"{path}: stored panel differs from expected "
            f"({file_panel.to_list()} vs {panel.to_list()})"
        )
    records = []
    rp = _records_path(path)
    if not rp.exists():
        raise CorruptFileError(f"{path}: records sidecar {rp} missing")
    with open(rp, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(CellRecord.from_dict(json.loads(line)))
    return PatchDataset(patches=tensors["patches"], records=records, panel=file_panel)


def dataset_config_hash(path) -> Optional[str]:
    header, _ = read_container(path)
    return header.get("config_hash")


# --- centers CSV: image_id,cell_id,row,col[,label] ---

def write_centers_csv(records: Iterable[CellRecord], path, config_hash: Optional[str] = None) -> None:
    import io

    buf = io.StringIO()
    if config_hash:
        buf.write(f"# config_hash={config_hash}\n")
    writer = csv.writer(buf)
    writer.writerow(["image_id", "cell_id", "row", "col", "label"])
    for r in records:
        writer.writerow([r.image_id, r.cell_id, r.row, r.col, r.label or ""])
    atomic_write(path, buf.getvalue().encode())


def read_centers_csv(path) -> List[CellRecord]:
    records = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        rows = [line for line in fh if not line.startswith("#")]
    reader = csv.DictReader(rows)
    required = {"image_id", "cell_id", "row", "col"}
    if reader.fieldnames is None or not required.issubset(reader.fieldnames):
        raise CorruptFileError(
            f"{path}: centers CSV must have columns image_id,cell_id,row,col[,label]"
        )
    for row in reader:
        records.append(
            CellRecord(
                cell_id=row["cell_id"],
                image_id=row["image_id"],
                row=int(row["row"]),
                col=int(row["col"]),
                label=row.get("label") or None,
            )
        )
    return records

"""Multi-channel image container and TIFF round-trips.

Images live as multi-page float32 TIFFs (one page per channel, page order =
panel order) with a JSON sidecar carrying the panel and metadata.
Segmentation masks are single-page 16-bit label TIFFs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
from PIL import Image

from ..container import atomic_write
from ..exceptions import DataError, PanelMismatchError, ShapeError
from .panel import MarkerPanel


@dataclass
class MultichannelImage:
    pixels: np.ndarray  # (H, W, C) float32, nonnegative
    panel: MarkerPanel
    image_id: str
    pixel_size_um: Optional[float] = None

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels, dtype=np.float32)
        if self.pixels.ndim != 3:
            raise ShapeError(f"pixels must be (H, W, C), got {self.pixels.shape}")
        if self.pixels.shape[-1] != len(self.panel):
            raise PanelMismatchError(
                f"image {self.image_id!r} has {self.pixels.shape[-1]} channels, "
                f"panel names {len(self.panel)}"
            )
        if not np.isfinite(self.pixels).all():
            raise DataError(f"image {self.image_id!r} contains non-finite pixels")
        if (self.pixels < 0).any():
            raise DataError(f"image {self.image_id!r} contains negative intensities")

    @property
    def shape(self):
        return self.pixels.shape


def _sidecar(path) -> Path:
    return Path(path).with_suffix(Path(path).suffix + ".json")


def save_image(image: MultichannelImage, path) -> None:
    path = Path(path)
    pages = [Image.fromarray(image.pixels[:, :, c], mode="F") for c in range(image.pixels.shape[-1])]
    pages[0].save(path, save_all=True, append_images=pages[1:])
    meta = {
        "image_id": image.image_id,
        "panel": image.panel.to_list(),
        "pixel_size_um": image.pixel_size_um,
    }
    atomic_write(_sidecar(path), json.dumps(meta, indent=2).encode())


def load_image(path, panel: Optional[MarkerPanel] = None) -> MultichannelImage:
    """Load a multi-page TIFF; ``panel`` (when given) must match the sidecar."""
    path = Path(path)
    with Image.open(path) as im:
        frames = []
        for i in range(im.n_frames):
            im.seek(i)
            frames.append(np.asarray(im, dtype=np.float32))
    pixels = np.stack(frames, axis=-1)
    sidecar = _sidecar(path)
    meta = {}
    if sidecar.exists():
        meta = json.loads(sidecar.read_text())
    file_panel = MarkerPanel.from_names(meta["panel"]) if "panel" in meta else None
    if panel is not None and file_panel is not None and panel != file_panel:
        raise PanelMismatchError(
            f"{path}: stored panel {file_panel.to_list()} != expected {panel.to_list()}"
        )
    use_panel = panel or file_panel
    if use_panel is None:
        raise PanelMismatchError(f"{path}: no panel sidecar and none supplied")
    if pixels.shape[-1] != len(use_panel):
        raise PanelMismatchError(
            f"{path}: {pixels.shape[-1]} channels under a {len(use_panel)}-marker panel"
        )
    return MultichannelImage(
        pixels=pixels,
        panel=use_panel,
        image_id=meta.get("image_id", path.stem),
        pixel_size_um=meta.get("pixel_size_um"),
    )


def save_mask(labels: np.ndarray, path) -> None:
    """Write a label image as single-page uint16 TIFF (0 = background)."""
    arr = np.asarray(labels)
    if arr.ndim != 2:
        raise ShapeError(f"mask must be 2-D, got {arr.shape}")
    if arr.min() < 0 or arr.max() > np.iinfo(np.uint16).max:
        raise DataError("mask labels must fit in uint16")
    Image.fromarray(arr.astype(np.uint16)).save(path)


def load_mask(path) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im, dtype=np.int64)

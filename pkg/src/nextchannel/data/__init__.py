from .images import (
    MultichannelImage,
    load_image,
    load_mask,
    save_image,
    save_mask,
)
from .panel import MarkerPanel, default_panel, load_panel, save_panel
from .patches import (
    CellRecord,
    ExtractionReport,
    PatchDataset,
    extract_patch,
    extract_patches,
    load_dataset,
    read_centers_csv,
    save_dataset,
    write_centers_csv,
)
from .synth import SynthResult, SynthSpec, orthogonal_signatures, synth_generate

__all__ = [
    "MarkerPanel",
    "default_panel",
    "save_panel",
    "load_panel",
    "MultichannelImage",
    "save_image",
    "load_image",
    "save_mask",
    "load_mask",
    "CellRecord",
    "PatchDataset",
    "ExtractionReport",
    "extract_patch",
    "extract_patches",
    "save_dataset",
    "load_dataset",
    "write_centers_csv",
    "read_centers_csv",
    "SynthSpec",
    "SynthResult",
    "synth_generate",
    "orthogonal_signatures",
]

"""Marker panel: the ordered channel naming shared by every artifact."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence, Tuple

from ..container import atomic_write
from ..exceptions import ConfigurationError

# markers that are referenced by name in default reports; the rest of the
# default 34-channel panel is filled with neutral placeholders
NAMED_MARKERS = ("CD3", "CD4", "CD8", "CD20", "GD2", "GZMB", "Vimentin", "S100B")


@dataclass(frozen=True)
class MarkerPanel:
    names: Tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(str(n) for n in self.names))
        if not self.names:
            raise ConfigurationError("panel must name at least one marker")
        if len(set(self.names)) != len(self.names):
            raise ConfigurationError("panel names must be unique")

    def __len__(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise ConfigurationError(f"marker {name!r} not in panel") from None

    def to_list(self) -> list:
        return list(self.names)

    @classmethod
    def from_names(cls, names: Sequence[str]) -> "MarkerPanel":
        return cls(names=tuple(names))


def default_panel(channels: int = 34) -> MarkerPanel:
    """Named markers first, neutral fillers up to the requested width."""
    if channels < 1:
        raise ConfigurationError("channels must be positive")
    names = list(NAMED_MARKERS[:channels])
    i = len(names) + 1
    while len(names) < channels:
        names.append(f"marker{i:02d}")
        i += 1
    return MarkerPanel(names=tuple(names))


def save_panel(panel: MarkerPanel, path) -> None:
    atomic_write(path, json.dumps(panel.to_list(), indent=2).encode())


def load_panel(path) -> MarkerPanel:
    with open(path, "r", encoding="utf-8") as fh:
        names = json.load(fh)
    if not isinstance(names, list):
        raise ConfigurationError(f"{path}: panel file must hold a JSON list of names")
    return MarkerPanel.from_names(names)

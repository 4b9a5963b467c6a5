"""Binary tensor container used for weights, patches and embeddings.

Layout (all integers little-endian):

    bytes 0..3    magic ``NXCH``
    bytes 4..7    uint32 format version
    bytes 8..11   uint32 header length L
    bytes 12..    UTF-8 JSON header of length L
    next 4        uint32 tensor count T
    then T records of:
        uint32 name length, UTF-8 name,
        uint32 ndim, ndim * uint64 dims,
        float32 data (C order)

The JSON header carries arbitrary metadata (model config, panel, run-config
hash). Tensors are always float32; callers cast on the way in/out.
"""

from __future__ import annotations

import json
import os
import struct
import tempfile
from typing import Dict, Tuple

import numpy as np

from .exceptions import CorruptFileError, FormatVersionError

MAGIC = b"NXCH"
FORMAT_VERSION = 1


def atomic_write(path, data: bytes) -> None:
    """Write ``data`` to ``path`` via a temp file + rename."""
    path = os.fspath(path)
    d = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=".part")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise


def write_container(path, header: dict, tensors: Dict[str, np.ndarray]) -> None:
    """Serialize ``tensors`` (converted to float32) plus a JSON header."""
    out = bytearray()
    out += MAGIC
    out += struct.pack("<I", FORMAT_VERSION)
    hdr = json.dumps(header, sort_keys=True).encode("utf-8")
    out += struct.pack("<I", len(hdr))
    out += hdr
    out += struct.pack("<I", len(tensors))
    for name, arr in tensors.items():
        arr = np.asarray(arr, dtype="<f4")
        if arr.ndim and not arr.flags["C_CONTIGUOUS"]:
            arr = np.ascontiguousarray(arr)
        nb = name.encode("utf-8")
        out += struct.pack("<I", len(nb))
        out += nb
        out += struct.pack("<I", arr.ndim)
        for d in arr.shape:
            out += struct.pack("<Q", d)
        out += arr.tobytes()
    atomic_write(path, bytes(out))


class _Reader:
    def __init__(self, path):
        try:
            with open(path, "rb") as fh:
                self.buf = fh.read()
        except OSError as exc:
            raise CorruptFileError(f"cannot read {path}: {exc}") from exc
        self.pos = 0
        self.path = os.fspath(path)

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise CorruptFileError(f"{self.path}: truncated at byte {self.pos}")
        b = self.buf[self.pos : self.pos + n]
        self.pos += n
        return b

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def u64(self) -> int:
        return struct.unpack("<Q", self.take(8))[0]


def read_container(path) -> Tuple[dict, Dict[str, np.ndarray]]:
    """Read a container; returns ``(header, tensors)``.

    Raises :class:`CorruptFileError` on bad magic/truncation and
    :class:`FormatVersionError` on an unknown version.
    """
    r = _Reader(path)
    if r.take(4) != MAGIC:
        raise CorruptFileError(f"{r.path}: bad magic, not a NXCH container")
    version = r.u32()
    if version != FORMAT_VERSION:
        raise FormatVersionError(
            f"{r.path}: format version {version}, supported {FORMAT_VERSION}"
        )
    hdr_len = r.u32()
    try:
        header = json.loads(r.take(hdr_len).decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptFileError(f"{r.path}: unreadable header: {exc}") from exc
    tensors: Dict[str, np.ndarray] = {}
    count = r.u32()
    for _ in range(count):
        name = r.take(r.u32()).decode("utf-8")
        ndim = r.u32()
        if ndim > 32:
            raise CorruptFileError(f"{r.path}: implausible ndim {ndim} for {name!r}")
        shape = tuple(r.u64() for _ in range(ndim))
        n_items = int(np.prod(shape, dtype=np.int64)) if shape else 1
        data = r.take(4 * n_items)
        tensors[name] = np.frombuffer(data, dtype="<f4").reshape(shape).copy()
    if r.pos != len(r.buf):
        raise CorruptFileError(f"{r.path}: {len(r.buf) - r.pos} trailing bytes")
    return header, tensors

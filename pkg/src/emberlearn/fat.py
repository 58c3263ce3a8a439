"""FAT1 raster file format.

Layout, all little-endian:

    bytes 0..3   magic ``FAT1``
    bytes 4..15  three u32: height, width, channels
    rest         height*width*channels float32 values, row-major with the
                 channel index fastest

The format is deliberately trivial so any language can read it bit-exactly.
NaN entries are legal (used for undefined arrival times).
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"FAT1"
_HEADER = struct.Struct("<4sIII")


class RasterFormatError(ValueError):
    """Raised when a FAT1 file is malformed or truncated."""


def write_fat(path: str | Path, data: np.ndarray) -> None:
    """Write a (H, W) or (H, W, C) array as float32 FAT1."""
    arr = np.asarray(data)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3:
        raise RasterFormatError(f"FAT1 stores 2D/3D rasters, got shape {arr.shape}")
    h, w, c = arr.shape
    payload = np.ascontiguousarray(arr, dtype="<f4").tobytes()
    with open(path, "wb") as f:
        f.write(_HEADER.pack(MAGIC, h, w, c))
        f.write(payload)


def read_fat(path: str | Path) -> np.ndarray:
    """Read a FAT1 file into a float32 (H, W, C) array."""
    with open(path, "rb") as f:
        header = f.read(_HEADER.size)
        if len(header) != _HEADER.size:
            raise RasterFormatError(f"{path}: truncated header")
        magic, h, w, c = _HEADER.unpack(header)
        if magic != MAGIC:
            raise RasterFormatError(f"{path}: bad magic {magic!r}")
        n = h * w * c
        payload = f.read(4 * n)
        if len(payload) != 4 * n:
            raise RasterFormatError(
                f"{path}: truncated payload ({len(payload)} of {4 * n} bytes)"
            )
        if f.read(1):
            raise RasterFormatError(f"{path}: trailing bytes after payload")
    return np.frombuffer(payload, dtype="<f4").reshape(h, w, c).copy()

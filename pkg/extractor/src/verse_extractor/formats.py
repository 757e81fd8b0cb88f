"""Writers for the VPGR/VEMB binary containers (little-endian, version 1).

These mirror the published container layouts exactly; the analysis toolkit's
readers are the compatibility oracle for every file written here.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

VEMB_MAGIC = b"VEMB"
VPGR_MAGIC = b"VPGR"
VERSION = 1


def _encode_id(sample_id: str) -> bytes:
    raw = sample_id.encode("utf-8")
    if len(raw) > 0xFFFF:
        raise ValueError(f"sample id too long: {sample_id[:32]!r}…")
    return struct.pack("<H", len(raw)) + raw


def write_vpgr(grids: list[tuple[str, np.ndarray]], path: str | Path) -> None:
    """grids: (sample_id, rows×cols×L float array) pairs."""
    with open(path, "wb") as fh:
        fh.write(VPGR_MAGIC)
        fh.write(struct.pack("<II", VERSION, len(grids)))
        for sample_id, values in grids:
            rows, cols, dim = values.shape
            fh.write(_encode_id(sample_id))
            fh.write(struct.pack("<HHI", rows, cols, dim))
            fh.write(np.ascontiguousarray(values, dtype="<f4").tobytes())


def write_vemb(rows: list[tuple[str, np.ndarray]], path: str | Path) -> None:
    """rows: (sample_id, length-L float vector) pairs, one per image."""
    if not rows:
        raise ValueError("refusing to write an empty embedding file")
    dim = rows[0][1].shape[0]
    with open(path, "wb") as fh:
        fh.write(VEMB_MAGIC)
        fh.write(struct.pack("<III", VERSION, len(rows), dim))
        fh.write(struct.pack("<I", len(rows)))
        for sample_id, _ in rows:
            fh.write(_encode_id(sample_id))
        for _, vector in rows:
            fh.write(np.ascontiguousarray(vector, dtype="<f4").tobytes())

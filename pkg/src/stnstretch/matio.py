"""Minimal binary matrix format used for debug dumps and conditioning export.

Layout (little-endian throughout):

    offset 0: uint32 rows
    offset 4: uint32 cols
    offset 8: rows * cols float32 values, row-major

No magic, no padding: the file size must equal 8 + 4*rows*cols bytes.
This is also the `cond.bin` format of the neural noise-synthesis protocol
(rows = CQT bins, cols = frames).
"""

from __future__ import annotations

import json
import struct

import numpy as np


def write_matrix(path, matrix: np.ndarray) -> None:
    m = np.ascontiguousarray(matrix, dtype="<f4")
    if m.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {m.shape}")
    with open(path, "wb") as fh:
        fh.write(struct.pack("<II", m.shape[0], m.shape[1]))
        fh.write(m.tobytes())


def read_matrix(path) -> np.ndarray:
    with open(path, "rb") as fh:
        header = fh.read(8)
        if len(header) != 8:
            raise ValueError(f"{path}: truncated header")
        rows, cols = struct.unpack("<II", header)
        body = fh.read()
    expected = 4 * rows * cols
    if len(body) != expected:
        raise ValueError(f"{path}: expected {expected} data bytes, found {len(body)}")
    return np.frombuffer(body, dtype="<f4").reshape(rows, cols).astype(np.float64)


def write_sidecar(path, info: dict) -> None:
    """JSON sidecar describing a matrix dump (config echo)."""
    with open(path, "w") as fh:
        json.dump(info, fh, indent=2, sort_keys=True)
        fh.write("\n")

"""File I/O for the synthesizer: 16-bit PCM WAV and the conditioning matrix.

Both formats belong to the host tool's noise-synthesis protocol and are
deliberately reimplemented here from their byte-level descriptions, so this
package stays importable without the host installed.

Matrix layout (little-endian): uint32 rows, uint32 cols, then rows*cols
float32 values row-major. File size must equal 8 + 4*rows*cols bytes.
"""

from __future__ import annotations

import struct

import numpy as np


class FileFormatError(ValueError):
    """Malformed or unsupported input file."""


PROTOCOL_RATE = 44100


def read_wav(path) -> tuple[np.ndarray, int]:
    """Read a PCM WAV file.

    Returns (samples, sample_rate) with samples float32 in [-1, 1),
    shape (n,) for mono or (channels, n) otherwise.
    """
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 12 or blob[:4] != b"RIFF" or blob[8:12] != b"WAVE":
        raise FileFormatError(f"{path}: not a RIFF/WAVE file")

    fmt = data = None
    pos = 12
    while pos + 8 <= len(blob):
        cid = blob[pos:pos + 4]
        size = struct.unpack_from("<I", blob, pos + 4)[0]
        body = blob[pos + 8:pos + 8 + size]
        if cid == b"fmt ":
            fmt = body
        elif cid == b"data":
            data = body
        pos += 8 + size + (size & 1)
    if fmt is None or data is None:
        raise FileFormatError(f"{path}: missing fmt or data chunk")

    tag, channels, rate, _, block_align, bits = struct.unpack_from("<HHIIHH", fmt, 0)
    if tag not in (0x0001, 0xFFFE):
        raise FileFormatError(f"{path}: unsupported format tag 0x{tag:04x}")
    if bits != 16:
        raise FileFormatError(f"{path}: {bits}-bit samples unsupported (16-bit PCM only)")
    if channels < 1:
        raise FileFormatError(f"{path}: bad channel count {channels}")

    frames = len(data) // block_align
    ints = np.frombuffer(data[:frames * block_align], dtype="<i2")
    samples = ints.astype(np.float32) / 32768.0
    if channels > 1:
        samples = samples.reshape(-1, channels).T
    return samples, rate


def read_wav_mono(path) -> tuple[np.ndarray, int]:
    """Like read_wav but downmixes multichannel input by averaging."""
    samples, rate = read_wav(path)
    if samples.ndim == 2:
        samples = samples.mean(axis=0)
    return samples, rate


def write_wav(path, samples: np.ndarray, sample_rate: int) -> None:
    """Write mono float samples as 16-bit PCM, clipping to full scale."""
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError(f"expected a mono signal, got shape {x.shape}")
    ints = np.clip(np.floor(x * 32768.0 + 0.5), -32768, 32767).astype("<i2")
    payload = ints.tobytes()

    fmt = struct.pack("<HHIIHH", 1, 1, sample_rate, sample_rate * 2, 2, 16)
    chunks = b"".join([
        b"fmt ", struct.pack("<I", len(fmt)), fmt,
        b"data", struct.pack("<I", len(payload)), payload,
        b"" if len(payload) % 2 == 0 else b"\x00",
    ])
    with open(path, "wb") as fh:
        fh.write(b"RIFF" + struct.pack("<I", 4 + len(chunks)) + b"WAVE" + chunks)


def read_matrix(path) -> np.ndarray:
    with open(path, "rb") as fh:
        header = fh.read(8)
        if len(header) != 8:
            raise FileFormatError(f"{path}: truncated header")
        rows, cols = struct.unpack("<II", header)
        body = fh.read()
    if len(body) != 4 * rows * cols:
        raise FileFormatError(
            f"{path}: expected {4 * rows * cols} data bytes, found {len(body)}"
        )
    return np.frombuffer(body, dtype="<f4").reshape(rows, cols).copy()


def write_matrix(path, matrix: np.ndarray) -> None:
    m = np.ascontiguousarray(matrix, dtype="<f4")
    if m.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {m.shape}")
    with open(path, "wb") as fh:
        fh.write(struct.pack("<II", m.shape[0], m.shape[1]))
        fh.write(m.tobytes())

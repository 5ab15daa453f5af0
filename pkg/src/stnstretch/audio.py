"""Audio signal container and PCM WAV file I/O.

Only uncompressed PCM WAV (16- or 24-bit) is supported, so files written
here round-trip bit-exactly. Samples are held as float64 in [-1, 1),
using the usual full-scale convention (int / 2^(bits-1)).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import resample_poly


class AudioFormatError(ValueError):
    """Unsupported or malformed audio file."""


@dataclass(frozen=True)
class Signal:
    """A mono or stereo audio signal.

    data: float array, shape (n,) for mono or (2, n) for stereo
          (two equal-length channel arrays).
    sample_rate: sampling frequency in Hz.
    """

    data: np.ndarray
    sample_rate: int

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim == 1:
            pass
        elif data.ndim == 2 and data.shape[0] in (1, 2):
            if data.shape[0] == 1:
                data = data[0]
        else:
            raise ValueError(f"expected shape (n,) or (2, n), got {data.shape}")
        if not np.all(np.isfinite(data)):
            raise ValueError("signal contains non-finite samples")
        if int(self.sample_rate) <= 0:
            raise ValueError("sample_rate must be positive")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    @property
    def channels(self) -> int:
        return 1 if self.data.ndim == 1 else 2

    @property
    def num_samples(self) -> int:
        """Samples per channel."""
        return self.data.shape[-1]

    @property
    def duration(self) -> float:
        return self.num_samples / self.sample_rate

    def channel(self, index: int) -> "Signal":
        """Extract one channel as a mono Signal."""
        if self.channels == 1:
            if index != 0:
                raise IndexError("mono signal has a single channel")
            return self
        return Signal(self.data[index], self.sample_rate)

    def require_mono(self) -> np.ndarray:
        if self.channels != 1:
            raise ValueError("operation requires a mono signal")
        return self.data


def mono(samples, sample_rate: int) -> Signal:
    return Signal(np.asarray(samples, dtype=np.float64), sample_rate)


def stereo(left, right, sample_rate: int) -> Signal:
    left = np.asarray(left, dtype=np.float64)
    right = np.asarray(right, dtype=np.float64)
    if left.shape != right.shape:
        raise ValueError("stereo channels must have equal length")
    return Signal(np.stack([left, right]), sample_rate)


# ---------------------------------------------------------------------------
# WAV I/O
# ---------------------------------------------------------------------------

_PCM_TAGS = (0x0001, 0xFFFE)  # plain PCM / WAVE_FORMAT_EXTENSIBLE wrapping PCM


def read_wav(path) -> Signal:
    """Read a 16- or 24-bit PCM WAV file.

    Raises AudioFormatError for anything else (float WAV, ADPCM, ...).
    """
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 12 or blob[:4] != b"RIFF" or blob[8:12] != b"WAVE":
        raise AudioFormatError(f"{path}: not a RIFF/WAVE file")

    fmt = None
    data = None
    pos = 12
    while pos + 8 <= len(blob):
        cid = blob[pos:pos + 4]
        size = struct.unpack_from("<I", blob, pos + 4)[0]
        body = blob[pos + 8:pos + 8 + size]
        if cid == b"fmt ":
            fmt = body
        elif cid == b"data":
            data = body
        pos += 8 + size + (size & 1)  # chunks are word-aligned
    if fmt is None or data is None:
        raise AudioFormatError(f"{path}: missing fmt or data chunk")

    tag, n_channels, rate, _, block_align, bits = struct.unpack_from("<HHIIHH", fmt, 0)
    if tag not in _PCM_TAGS:
        raise AudioFormatError(f"{path}: unsupported format tag 0x{tag:04x} (PCM only)")
    if bits not in (16, 24):
        raise AudioFormatError(f"{path}: {bits}-bit samples unsupported (16/24-bit PCM only)")
    if n_channels not in (1, 2):
        raise AudioFormatError(f"{path}: {n_channels} channels unsupported (mono/stereo only)")

    n_frames = len(data) // block_align
    data = data[:n_frames * block_align]
    if bits == 16:
        ints = np.frombuffer(data, dtype="<i2").astype(np.float64)
        samples = ints / 32768.0
    else:
        raw = np.frombuffer(data, dtype=np.uint8).reshape(-1, 3)
        ints = (
            raw[:, 0].astype(np.int32)
            | (raw[:, 1].astype(np.int32) << 8)
            | (raw[:, 2].astype(np.int32) << 16)
        )
        ints = np.where(ints >= 1 << 23, ints - (1 << 24), ints)
        samples = ints.astype(np.float64) / 8388608.0

    if n_channels == 2:
        samples = samples.reshape(-1, 2).T
    return Signal(samples, rate)


def write_wav(path, signal: Signal, bits: int = 16) -> None:
    """Write a Signal as 16- or 24-bit PCM WAV. Samples are clipped to full scale."""
    if bits not in (16, 24):
        raise AudioFormatError(f"{bits}-bit output unsupported (16/24-bit PCM only)")
    full = float(1 << (bits - 1))
    data = signal.data if signal.channels == 2 else signal.data[np.newaxis, :]
    ints = np.clip(np.floor(data * full + 0.5), -full, full - 1).astype(np.int64)
    interleaved = ints.T.reshape(-1)

    if bits == 16:
        payload = interleaved.astype("<i2").tobytes()
    else:
        u = (interleaved & 0xFFFFFF).astype(np.uint32)
        payload = np.stack(
            [u & 0xFF, (u >> 8) & 0xFF, (u >> 16) & 0xFF], axis=1
        ).astype(np.uint8).tobytes()

    n_channels = signal.channels
    block_align = n_channels * bits // 8
    byte_rate = signal.sample_rate * block_align
    fmt = struct.pack("<HHIIHH", 1, n_channels, signal.sample_rate, byte_rate, block_align, bits)
    chunks = b"".join([
        b"fmt ", struct.pack("<I", len(fmt)), fmt,
        b"data", struct.pack("<I", len(payload)), payload,
        b"" if len(payload) % 2 == 0 else b"\x00",
    ])
    with open(path, "wb") as fh:
        fh.write(b"RIFF" + struct.pack("<I", 4 + len(chunks)) + b"WAVE" + chunks)


def resample(signal: Signal, target_rate: int) -> Signal:
    """Polyphase resampling to target_rate."""
    if signal.sample_rate == target_rate:
        return signal
    import math

    g = math.gcd(target_rate, signal.sample_rate)
    up, down = target_rate // g, signal.sample_rate // g
    data = resample_poly(signal.data, up, down, axis=-1)
    return Signal(data, target_rate)

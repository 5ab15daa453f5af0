"""Local conditioning features computed from raw audio.

The synthesizer is conditioned on a log-frequency magnitude matrix: 451 rows
spaced 48 per octave from 32.7 Hz, one column per 256-sample hop, values
log-compressed into [0, 1]. That is the shape and scaling of the `cond.bin`
matrices the host tool sends over the file protocol.

When this package computes features itself (training, the `generate`
command), it approximates the host's constant-Q analysis with a fixed-window
STFT and a triangular filterbank on the same log-spaced centers. Cheap, and
close enough for a toy model; the row format is identical either way.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy.signal.windows import hann

SAMPLE_RATE = 44100
HOP = 256
N_BINS = 451
BINS_PER_OCTAVE = 48
F_MIN = 32.7
N_FFT = 8192
COMPRESS_SPAN = 1e4


def center_frequencies(n_bins: int = N_BINS) -> np.ndarray:
    k = np.arange(n_bins)
    return F_MIN * 2.0 ** (k / BINS_PER_OCTAVE)


def compress(values: np.ndarray) -> np.ndarray:
    out = np.log1p(np.asarray(values, dtype=np.float64) * COMPRESS_SPAN)
    out /= math.log(COMPRESS_SPAN)
    return np.clip(out, 0.0, 1.0)


def decompress(values: np.ndarray) -> np.ndarray:
    return np.expm1(np.asarray(values, dtype=np.float64) * math.log(COMPRESS_SPAN)) / COMPRESS_SPAN


@lru_cache(maxsize=4)
def _filterbank(sample_rate: int) -> np.ndarray:
    """(N_BINS, rfft bins) matrix of normalized triangular filters.

    Triangles run from the previous to the next log-spaced center. In the
    lowest octaves the centers sit closer together than the STFT bin
    spacing; a triangle that captures no bin at all falls back to the
    nearest one, so every row stays nonzero.
    """
    centers = center_frequencies()
    freqs = np.fft.rfftfreq(N_FFT, d=1.0 / sample_rate)
    bank = np.zeros((N_BINS, freqs.size))
    for k, f_c in enumerate(centers):
        lo = centers[k - 1] if k > 0 else f_c / 2.0 ** (1.0 / BINS_PER_OCTAVE)
        hi = centers[k + 1] if k + 1 < N_BINS else min(f_c * 2.0 ** (1.0 / BINS_PER_OCTAVE),
                                                       sample_rate / 2.0)
        rising = (freqs - lo) / max(f_c - lo, 1e-9)
        falling = (hi - freqs) / max(hi - f_c, 1e-9)
        tri = np.maximum(0.0, np.minimum(rising, falling))
        if tri.sum() <= 0.0:
            tri[np.argmin(np.abs(freqs - f_c))] = 1.0
        bank[k] = tri / tri.sum()
    return bank


def conditioning(samples: np.ndarray, sample_rate: int = SAMPLE_RATE) -> np.ndarray:
    """Compressed conditioning matrix, shape (N_BINS, frames).

    Frames are centered on multiples of HOP; there are ceil(len / HOP) of
    them, matching the protocol's frame count for the same audio. Magnitudes
    are scaled so a full-scale tone lands near 1.0 before compression.
    """
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("conditioning expects a mono signal")
    n_frames = max(1, -(-x.size // HOP))

    window = hann(N_FFT, sym=False)
    scale = 2.0 / window.sum()
    half = N_FFT // 2
    padded = np.pad(x, (half, half + n_frames * HOP))
    frames = np.stack([padded[m * HOP:m * HOP + N_FFT] for m in range(n_frames)])
    spectra = np.abs(np.fft.rfft(frames * window, axis=1)) * scale

    bank = _filterbank(sample_rate)
    return compress(bank @ spectra.T).astype(np.float32)

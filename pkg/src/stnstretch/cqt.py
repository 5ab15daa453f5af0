"""Constant-Q magnitude transform used as the noise-conditioning representation.

Bins are spaced logarithmically from f_min up to (but excluding) f_max with a
fixed number of bins per octave; at the defaults (32.7 Hz to Nyquist at
44.1 kHz, 48 bins/octave) this yields 451 bins. Each bin k correlates the
signal against a Hann-windowed complex exponential whose length keeps the
quality factor Q = 1/(2^(1/B) - 1) constant.

The correlation is evaluated in the frequency domain: all kernels are
transformed once into sparse spectral rows (truncated at 1e-4 of their peak
magnitude), and each analysis frame needs a single FFT followed by a sparse
matrix product. Kernel tables are cached per (sample_rate, f_min, f_max,
bins_per_octave) and shared read-only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .audio import Signal
from .matio import write_matrix, write_sidecar
from .spectral import hann_periodic

# Compression used for conditioning values: log(1 + m*1e4)/log(1e4), clipped
# to [0, 1]. Invertible below full scale; magnitudes above 1 saturate.
_COMPRESS_SPAN = 1.0e4
_KERNEL_TRUNCATION = 1.0e-4


@dataclass(frozen=True)
class CqtConfig:
    hop: int = 256
    f_min: float = 32.7
    f_max: float | None = None  # None -> Nyquist at transform time
    bins_per_octave: int = 48

    def __post_init__(self):
        if self.hop <= 0:
            raise ValueError("hop must be positive")
        if self.f_min <= 0:
            raise ValueError("f_min must be positive")
        if self.bins_per_octave <= 0:
            raise ValueError("bins_per_octave must be positive")

    def resolve_f_max(self, sample_rate: int) -> float:
        nyquist = sample_rate / 2.0
        f_max = nyquist if self.f_max is None else self.f_max
        if f_max > nyquist:
            raise ValueError(f"f_max {f_max} Hz exceeds Nyquist {nyquist} Hz")
        if f_max <= self.f_min:
            raise ValueError("f_max must exceed f_min")
        return f_max

    def bin_count(self, sample_rate: int) -> int:
        """Bins spanning [f_min, f_max): floor(B * log2(f_max/f_min))."""
        f_max = self.resolve_f_max(sample_rate)
        octaves = math.log2(f_max / self.f_min)
        return int(math.floor(self.bins_per_octave * octaves + 1e-9))

    def center_frequencies(self, sample_rate: int) -> np.ndarray:
        k = np.arange(self.bin_count(sample_rate))
        return self.f_min * 2.0 ** (k / self.bins_per_octave)

    @property
    def q_factor(self) -> float:
        return 1.0 / (2.0 ** (1.0 / self.bins_per_octave) - 1.0)


@dataclass(frozen=True)
class CqtFeatures:
    """Real conditioning matrix, shape (bins, frames)."""

    values: np.ndarray
    hop: int
    config: CqtConfig
    sample_rate: int
    log_compressed: bool = False

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise ValueError("feature values must be 2-D (bins, frames)")
        if values.size and float(values.min()) < 0.0:
            raise ValueError("feature values must be nonnegative")
        object.__setattr__(self, "values", values)

    @property
    def bins(self) -> int:
        return self.values.shape[0]

    @property
    def frames(self) -> int:
        return self.values.shape[1]

    def compressed(self) -> "CqtFeatures":
        if self.log_compressed:
            return self
        return CqtFeatures(
            compress_magnitude(self.values), self.hop, self.config,
            self.sample_rate, log_compressed=True,
        )

    def linear_magnitude(self) -> np.ndarray:
        return decompress_magnitude(self.values) if self.log_compressed else self.values


def compress_magnitude(values: np.ndarray) -> np.ndarray:
    out = np.log1p(np.asarray(values, dtype=np.float64) * _COMPRESS_SPAN)
    out /= math.log(_COMPRESS_SPAN)
    return np.clip(out, 0.0, 1.0)


def decompress_magnitude(values: np.ndarray) -> np.ndarray:
    return np.expm1(np.asarray(values, dtype=np.float64) * math.log(_COMPRESS_SPAN)) / _COMPRESS_SPAN


# ---------------------------------------------------------------------------
# Kernel table
# ---------------------------------------------------------------------------

_kernel_cache: dict[tuple, tuple] = {}


def _kernel_table(config: CqtConfig, sample_rate: int):
    """Sparse spectral kernels (bins x rfft bins) plus the FFT frame size."""
    f_max = config.resolve_f_max(sample_rate)
    key = (sample_rate, config.f_min, f_max, config.bins_per_octave)
    cached = _kernel_cache.get(key)
    if cached is not None:
        return cached

    freqs = config.center_frequencies(sample_rate)
    q = config.q_factor
    lengths = np.maximum(4, np.round(q * sample_rate / freqs).astype(int))
    n_fft = 1 << int(math.ceil(math.log2(lengths.max())))
    n_rbins = n_fft // 2 + 1

    rows, cols, vals = [], [], []
    gains = np.empty(len(freqs))
    buf = np.zeros(n_fft, dtype=np.complex128)
    for k, (f_k, n_k) in enumerate(zip(freqs, lengths)):
        window = hann_periodic(n_k)
        n = np.arange(n_k)
        phase = 2.0 * np.pi * f_k * (n - (n_k - 1) / 2.0) / sample_rate
        kernel = (2.0 / window.sum()) * window * np.exp(1j * phase)
        # l2 norm: expected bin magnitude for unit-variance white noise input.
        gains[k] = np.linalg.norm(kernel)
        start = (n_fft - n_k) // 2  # center kernels in the frame
        buf[:] = 0.0
        buf[start:start + n_k] = kernel
        # Complex kernels concentrate at +f_k, so the non-negative half of the
        # spectrum carries essentially all their energy; keep only that half
        # and pair it with the signal's rfft.
        spec_row = np.conj(np.fft.fft(buf)[:n_rbins]) / n_fft
        keep = np.abs(spec_row) >= _KERNEL_TRUNCATION * np.abs(spec_row).max()
        idx = np.nonzero(keep)[0]
        rows.append(np.full(idx.size, k))
        cols.append(idx)
        vals.append(spec_row[idx])

    table = sparse.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(len(freqs), n_rbins),
    )
    _kernel_cache[key] = (table, n_fft, gains)
    return _kernel_cache[key]


def white_noise_gains(config: CqtConfig, sample_rate: int) -> np.ndarray:
    """Per-bin expected magnitude for unit-variance white noise input.

    Dividing CQT magnitudes by these gains converts them into estimates of
    sqrt(PSD) at the bin centers, which is what a noise resynthesizer needs:
    without the division, constant-Q bandwidths tilt a flat spectrum by
    sqrt(f).
    """
    _, _, gains = _kernel_table(config, sample_rate)
    return gains.copy()


_FRAME_CHUNK = 64


def cqt(signal: Signal, config: CqtConfig | None = None) -> CqtFeatures:
    """Constant-Q magnitude features of a mono signal; frame m is centered
    at sample m*hop, frame count = ceil(len/hop)."""
    if config is None:
        config = CqtConfig()
    x = signal.require_mono()
    if x.size == 0:
        raise ValueError("cannot analyze an empty signal")
    table, n_fft, _ = _kernel_table(config, signal.sample_rate)
    n_frames = -(-x.size // config.hop)

    half = n_fft // 2
    padded = np.concatenate([np.zeros(half), x, np.zeros(half + n_fft)])
    values = np.empty((table.shape[0], n_frames))
    for m0 in range(0, n_frames, _FRAME_CHUNK):
        m1 = min(m0 + _FRAME_CHUNK, n_frames)
        idx = np.arange(n_fft)[np.newaxis, :] + config.hop * np.arange(m0, m1)[:, np.newaxis]
        spectra = np.fft.rfft(padded[idx], axis=1)
        values[:, m0:m1] = np.abs(table @ spectra.T)
    return CqtFeatures(values, config.hop, config, signal.sample_rate)


def export_features(features: CqtFeatures, base_path) -> None:
    """Write features as <base>.bin (binary matrix) plus a <base>.json sidecar."""
    base = str(base_path)
    write_matrix(base + ".bin", features.values)
    write_sidecar(base + ".json", {
        "hop": features.hop,
        "f_min": features.config.f_min,
        "f_max": features.config.resolve_f_max(features.sample_rate),
        "bins_per_octave": features.config.bins_per_octave,
        "sample_rate": features.sample_rate,
        "bins": features.bins,
        "frames": features.frames,
        "log_compressed": features.log_compressed,
        "layout": "rows=bins, cols=frames, float32 little-endian",
    })

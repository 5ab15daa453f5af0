"""Windowed STFT/ISTFT with exact-length inverse, plus spectrogram median filters.

Conventions used throughout the package:

* Frames are centered: the signal is zero-padded by half a window on both
  sides, frame m starts at m*hop in padded coordinates, so its center sits
  at sample m*hop of the original signal. Frame count is 1 + len(x)//hop.
* The inverse is weighted overlap-add with the analysis window and a
  division by the accumulated squared window, then a crop back to the
  recorded original length. For COLA window/hop pairs this reconstructs to
  numerical precision.
* Median filters slide a length-L window along one axis with offsets
  -(L-1)//2 .. L//2 (centered for odd L, one extra trailing element for
  even L), replicate edges, and take the lower-middle order statistic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .audio import Signal
from .util import is_power_of_two

COLA_RIPPLE_TOL = 1e-10


def hann_periodic(length: int) -> np.ndarray:
    """Periodic (DFT-even) Hann window; COLA at hop = length/4 and length/2."""
    n = np.arange(length)
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * n / length)


def cola_ripple(window: np.ndarray, hop: int) -> float:
    """Relative ripple of the infinite overlap-add of `window` at `hop`."""
    acc = np.zeros(hop)
    for start in range(0, len(window), hop):
        chunk = window[start:start + hop]
        acc[:len(chunk)] += chunk
    mean = float(np.mean(acc))
    if mean <= 0.0:
        return np.inf
    return float((acc.max() - acc.min()) / mean)


@dataclass(frozen=True)
class StftConfig:
    """Analysis window geometry. Defaults: periodic Hann, hop = window/4.

    require_cola=False skips the overlap-add ripple check, for analysis-only
    configurations (the phase vocoder reads frames at an arbitrary hop and
    never inverts with this geometry).
    """

    window_length: int
    hop: int = 0  # 0 -> window_length // 4
    window: np.ndarray | None = None
    require_cola: bool = True

    def __post_init__(self):
        if not is_power_of_two(self.window_length):
            raise ValueError(f"window_length must be a power of two, got {self.window_length}")
        hop = self.hop if self.hop else self.window_length // 4
        if not 0 < hop <= self.window_length:
            raise ValueError(f"hop must be in (0, window_length], got {hop}")
        window = self.window
        if window is None:
            window = hann_periodic(self.window_length)
        window = np.asarray(window, dtype=np.float64)
        if window.shape != (self.window_length,):
            raise ValueError("window length does not match window_length")
        if self.require_cola:
            ripple = cola_ripple(window, hop)
            if ripple > COLA_RIPPLE_TOL:
                raise ValueError(
                    f"window/hop pair is not constant-overlap-add (ripple {ripple:.3g})"
                )
        object.__setattr__(self, "hop", hop)
        object.__setattr__(self, "window", window)

    @property
    def bins(self) -> int:
        return self.window_length // 2 + 1


@dataclass(frozen=True)
class Spectrogram:
    """Complex STFT matrix, indexed (frame, bin)."""

    values: np.ndarray
    config: StftConfig
    sample_rate: int
    original_length: int

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.complex128)
        if values.ndim != 2:
            raise ValueError("spectrogram values must be 2-D (frames, bins)")
        if values.shape[1] != self.config.bins:
            raise ValueError(
                f"expected {self.config.bins} bins for window {self.config.window_length},"
                f" got {values.shape[1]}"
            )
        if values.shape[0] < 1:
            raise ValueError("spectrogram must have at least one frame")
        if not np.all(np.isfinite(values)):
            raise ValueError("spectrogram contains non-finite entries")
        object.__setattr__(self, "values", values)

    @property
    def frames(self) -> int:
        return self.values.shape[0]

    @property
    def bins(self) -> int:
        return self.values.shape[1]

    def magnitude(self) -> np.ndarray:
        return np.abs(self.values)

    def with_values(self, values: np.ndarray) -> "Spectrogram":
        return Spectrogram(values, self.config, self.sample_rate, self.original_length)


def frame_count(num_samples: int, hop: int) -> int:
    return 1 + num_samples // hop


def stft(signal: Signal, config: StftConfig) -> Spectrogram:
    """Centered STFT of a mono signal."""
    x = signal.require_mono()
    if x.size == 0:
        raise ValueError("cannot analyze an empty signal")
    length = config.window_length
    half = length // 2
    padded = np.concatenate([np.zeros(half), x, np.zeros(length)])
    n_frames = frame_count(x.size, config.hop)
    idx = np.arange(length)[np.newaxis, :] + config.hop * np.arange(n_frames)[:, np.newaxis]
    frames = padded[idx] * config.window
    values = np.fft.rfft(frames, axis=1)
    return Spectrogram(values, config, signal.sample_rate, x.size)


def istft(spec: Spectrogram) -> Signal:
    """Weighted overlap-add inverse; output length equals spec.original_length."""
    config = spec.config
    length = config.window_length
    half = length // 2
    expected_frames = frame_count(spec.original_length, config.hop)
    if spec.frames != expected_frames:
        raise ValueError(
            f"inconsistent geometry: {spec.frames} frames recorded,"
            f" {expected_frames} expected for length {spec.original_length}"
        )
    frames = np.fft.irfft(spec.values, n=length, axis=1) * config.window

    total = (spec.frames - 1) * config.hop + length
    acc = np.zeros(total)
    wsum = np.zeros(total)
    wsq = config.window ** 2
    for m in range(spec.frames):
        start = m * config.hop
        acc[start:start + length] += frames[m]
        wsum[start:start + length] += wsq
    live = wsum > 1e-12
    acc[live] /= wsum[live]
    out = acc[half:half + spec.original_length]
    if out.size < spec.original_length:
        out = np.pad(out, (0, spec.original_length - out.size))
    return Signal(out, spec.sample_rate)


# ---------------------------------------------------------------------------
# Median filtering
# ---------------------------------------------------------------------------

# Upper bound on windowed elements materialized per chunk (keeps memory flat).
_MEDIAN_CHUNK_ELEMENTS = 16_000_000


def _median_along_axis0(mag: np.ndarray, length: int) -> np.ndarray:
    """Sliding median down the rows of `mag` (edge-replicated, lower-middle tie rule)."""
    before = (length - 1) // 2
    after = length // 2
    kth = (length - 1) // 2
    padded = np.pad(mag, ((before, after), (0, 0)), mode="edge")
    n_rows, n_cols = mag.shape
    out = np.empty_like(mag)
    windows = np.lib.stride_tricks.sliding_window_view(padded, length, axis=0)
    cols_per_chunk = max(1, _MEDIAN_CHUNK_ELEMENTS // (length * n_rows))
    for c0 in range(0, n_cols, cols_per_chunk):
        c1 = min(c0 + cols_per_chunk, n_cols)
        block = np.partition(windows[:, c0:c1, :], kth, axis=2)
        out[:, c0:c1] = block[:, :, kth]
    return out


def _check_median_args(mag: np.ndarray, length: int, extent: int, axis_name: str):
    if length < 1:
        raise ValueError(f"median length must be >= 1, got {length}")
    if length > 2 * extent:
        raise ValueError(
            f"median length {length} exceeds twice the {axis_name} extent ({extent})"
        )
    if mag.size and float(mag.min()) < 0.0:
        raise ValueError("median filtering expects a nonnegative magnitude matrix")


def median_filter_time(mag: np.ndarray, length: int) -> np.ndarray:
    """Median along the frame (time) axis of a (frames, bins) magnitude matrix.

    Highlights horizontal ridges: sustained tonal partials survive, isolated
    broadband frames are suppressed.
    """
    mag = np.asarray(mag, dtype=np.float64)
    _check_median_args(mag, length, mag.shape[0], "time")
    if length == 1:
        return mag.copy()
    return _median_along_axis0(mag, length)


def median_filter_freq(mag: np.ndarray, length: int) -> np.ndarray:
    """Median along the bin (frequency) axis; highlights vertical (impulsive) ridges."""
    mag = np.asarray(mag, dtype=np.float64)
    _check_median_args(mag, length, mag.shape[1], "frequency")
    if length == 1:
        return mag.copy()
    return _median_along_axis0(mag.T, length).T

"""Phase vocoder with identity phase locking for the tonal component.

Spectral peaks are picked per frame; each peak's synthesis phase advances by
its instantaneous frequency (estimated from the analysis phase increment)
times the synthesis hop, and every bin in the peak's region of influence is
rotated rigidly with it. Rigid rotation preserves the relative phase
structure around each peak, which is what keeps stretched tones from turning
phasey.

Rate handling: the nominal synthesis hop stays at a quarter window (dense
overlap-add regardless of the stretch factor) while the analysis hop is
derived as round(synthesis_hop / alpha). Synthesis frame m lands at
round(alpha * m * analysis_hop), so the long-run rate is exactly alpha even
though individual hops are rounded.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .audio import Signal
from .spectral import StftConfig, stft
from .util import round_half_up

ALPHA_MIN = 0.25
ALPHA_MAX = 16.0


@dataclass(frozen=True)
class PvConfig:
    """Geometry for the sines stretcher (defaults follow the stage-1 analysis)."""

    window_length: int = 8192
    synthesis_hop: int = 0  # 0 -> window_length // 4

    def __post_init__(self):
        hop = self.synthesis_hop if self.synthesis_hop else self.window_length // 4
        if not 0 < hop <= self.window_length // 2:
            raise ValueError("synthesis_hop must be in (0, window_length/2]")
        object.__setattr__(self, "synthesis_hop", hop)

    def analysis_hop(self, alpha: float) -> int:
        return max(1, round_half_up(self.synthesis_hop / alpha))


def _find_peaks(mag: np.ndarray) -> np.ndarray:
    """Indices of local maxima over their 4 neighboring bins (2 per side).

    Left comparisons are strict and right ones non-strict, so an exact
    plateau yields a single, deterministic peak.
    """
    padded = np.full(mag.size + 4, -1.0)
    padded[2:-2] = mag
    center = padded[2:-2]
    is_peak = (
        (center > padded[1:-3])
        & (center > padded[:-4])
        & (center >= padded[3:-1])
        & (center >= padded[4:])
        & (center > 0.0)
    )
    return np.nonzero(is_peak)[0]


def _region_bounds(mag: np.ndarray, peaks: np.ndarray) -> np.ndarray:
    """Start index of each peak's region of influence (regions partition all bins).

    Adjacent regions split at the lowest-magnitude bin between the peaks;
    the split bin itself belongs to the left region.
    """
    starts = np.empty(peaks.size, dtype=int)
    starts[0] = 0
    for i in range(peaks.size - 1):
        lo, hi = peaks[i] + 1, peaks[i + 1]
        split = lo + int(np.argmin(mag[lo:hi])) if hi > lo else lo
        starts[i + 1] = split + 1
    return starts


def stretch_sines(
    sines: Signal,
    alpha: float,
    config: PvConfig | None = None,
) -> Signal:
    """Time-stretch a mono tonal signal by alpha; output length is
    round(alpha * len) exactly."""
    if not ALPHA_MIN <= alpha <= ALPHA_MAX:
        raise ValueError(f"alpha {alpha} outside supported range [{ALPHA_MIN}, {ALPHA_MAX}]")
    if config is None:
        config = PvConfig()
    x = sines.require_mono()
    target_length = round_half_up(alpha * x.size)
    if x.size == 0 or target_length == 0:
        return Signal(np.zeros(target_length), sines.sample_rate)

    length = config.window_length
    analysis_hop = config.analysis_hop(alpha)
    # Analysis-only geometry: the hop depends on alpha and rarely satisfies
    # COLA, which is fine because synthesis overlap-adds at its own positions.
    spec = stft(sines, StftConfig(length, analysis_hop, require_cola=False))
    X = spec.values
    n_frames, n_bins = X.shape
    window = spec.config.window

    syn_pos = np.array(
        [round_half_up(alpha * m * analysis_hop) for m in range(n_frames)]
    )
    omega = 2.0 * np.pi * np.arange(n_bins) / length  # rad/sample at bin centers

    phases = np.angle(X)
    Y = np.empty_like(X)
    Y[0] = X[0]
    psi = phases[0].copy()
    for m in range(1, n_frames):
        hop_out = int(syn_pos[m] - syn_pos[m - 1])
        dphi = phases[m] - phases[m - 1] - omega * analysis_hop
        dphi -= 2.0 * np.pi * np.round(dphi / (2.0 * np.pi))
        inst = omega + dphi / analysis_hop

        mag = np.abs(X[m])
        peaks = _find_peaks(mag)
        if peaks.size:
            psi_peaks = psi[peaks] + inst[peaks] * hop_out
            theta_peaks = psi_peaks - phases[m][peaks]
            starts = _region_bounds(mag, peaks)
            lengths = np.diff(np.append(starts, n_bins))
            theta = np.repeat(theta_peaks, lengths)
        else:
            theta = psi + inst * hop_out - phases[m]
        Y[m] = X[m] * np.exp(1j * theta)
        psi = phases[m] + theta

    # Overlap-add at the irregular synthesis positions.
    frames = np.fft.irfft(Y, n=length, axis=1) * window
    total = int(syn_pos[-1]) + length
    acc = np.zeros(total)
    wsum = np.zeros(total)
    wsq = window ** 2
    for m in range(n_frames):
        start = int(syn_pos[m])
        acc[start:start + length] += frames[m]
        wsum[start:start + length] += wsq
    live = wsum > 1e-12
    acc[live] /= wsum[live]

    half = length // 2
    out = acc[half:half + target_length]
    if out.size < target_length:
        out = np.pad(out, (0, target_length - out.size))
    return Signal(out, sines.sample_rate)

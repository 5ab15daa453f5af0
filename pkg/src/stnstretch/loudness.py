"""Integrated loudness measurement and normalization per ITU-R BS.1770.

The measurement chain: K-weighting (a high-frequency shelf followed by a
high-pass, both biquads designed from the analog prototypes at the signal's
sample rate), mean-square energy over 400 ms blocks with 75% overlap, block
loudness -0.691 + 10 log10(sum of channel energies), then two gating passes
(absolute at -70 LUFS, relative at 10 LU under the gated mean).
"""

from __future__ import annotations

import numpy as np
from scipy.signal import sosfilt

from .audio import Signal

BLOCK_S = 0.400
OVERLAP = 0.75
ABSOLUTE_GATE_LUFS = -70.0
RELATIVE_GATE_LU = 10.0
DEFAULT_TARGET_LUFS = -23.0


class LoudnessError(ValueError):
    """Raised when a signal has no gated blocks to measure."""


def _shelf_stage(rate: float) -> np.ndarray:
    gain_db = 3.999843853973347
    f0 = 1681.974450955533
    q = 0.7071752369554196
    k = np.tan(np.pi * f0 / rate)
    vh = 10.0 ** (gain_db / 20.0)
    vb = vh ** 0.4996667741545416
    a0 = 1.0 + k / q + k * k
    return np.array([
        (vh + vb * k / q + k * k) / a0,
        2.0 * (k * k - vh) / a0,
        (vh - vb * k / q + k * k) / a0,
        1.0,
        2.0 * (k * k - 1.0) / a0,
        (1.0 - k / q + k * k) / a0,
    ])


def _highpass_stage(rate: float) -> np.ndarray:
    f0 = 38.13547087602444
    q = 0.5003270373238773
    k = np.tan(np.pi * f0 / rate)
    a0 = 1.0 + k / q + k * k
    return np.array([
        1.0, -2.0, 1.0,
        1.0,
        2.0 * (k * k - 1.0) / a0,
        (1.0 - k / q + k * k) / a0,
    ])


def k_weighting_sos(rate: float) -> np.ndarray:
    """Second-order sections of the K-weighting filter at this sample rate."""
    return np.stack([_shelf_stage(rate), _highpass_stage(rate)])


def _block_energies(signal: Signal) -> np.ndarray:
    """Per-block mean-square energy summed over channels, K-weighted."""
    data = np.atleast_2d(signal.data)
    sos = k_weighting_sos(signal.sample_rate)
    weighted = sosfilt(sos, data, axis=1)

    block = int(round(BLOCK_S * signal.sample_rate))
    step = int(round(block * (1.0 - OVERLAP)))
    n = weighted.shape[1]
    if n < block:
        raise LoudnessError(
            f"unmeasurable loudness: signal shorter than one {BLOCK_S*1000:.0f} ms block"
        )
    n_blocks = 1 + (n - block) // step
    starts = np.arange(n_blocks) * step
    sq = weighted ** 2
    csum = np.concatenate([np.zeros((sq.shape[0], 1)), np.cumsum(sq, axis=1)], axis=1)
    z = (csum[:, starts + block] - csum[:, starts]) / block  # (channels, blocks)
    return z.sum(axis=0)


def integrated_loudness(signal: Signal) -> float:
    """Gated integrated loudness in LUFS."""
    energy = _block_energies(signal)
    with np.errstate(divide="ignore"):
        block_lufs = -0.691 + 10.0 * np.log10(np.maximum(energy, 0.0))

    above_abs = block_lufs > ABSOLUTE_GATE_LUFS
    if not above_abs.any():
        raise LoudnessError("unmeasurable loudness: all blocks below the absolute gate")
    relative_gate = (
        -0.691 + 10.0 * np.log10(energy[above_abs].mean()) - RELATIVE_GATE_LU
    )
    gated = above_abs & (block_lufs > relative_gate)
    if not gated.any():
        raise LoudnessError("unmeasurable loudness: all blocks below the relative gate")
    return float(-0.691 + 10.0 * np.log10(energy[gated].mean()))


def normalize_loudness(
    signal: Signal, target_lufs: float = DEFAULT_TARGET_LUFS
) -> tuple[Signal, float]:
    """Scale to the target integrated loudness; returns (scaled signal, measured LUFS).

    A pure gain change: the inter-channel balance and waveform shape are untouched.
    """
    measured = integrated_loudness(signal)
    gain = 10.0 ** ((target_lufs - measured) / 20.0)
    return Signal(signal.data * gain, signal.sample_rate), measured

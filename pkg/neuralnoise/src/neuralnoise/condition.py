"""Dilating conditioning frames onto the output sample grid.

The stretch factor never touches the network itself. It only changes how
many audio samples are generated per conditioning frame: round(alpha * hop)
of them, so alpha = 2 with the standard 256-sample hop yields 512 samples
per frame. Upsampling interpolates rows linearly between neighboring frames
rather than holding each frame, which avoids staircase conditioning at
large factors.
"""

from __future__ import annotations

import math

import numpy as np

ALPHA_MIN = 1.0
ALPHA_MAX = 16.0


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def samples_per_frame(alpha: float, hop: int = 256) -> int:
    """Audio samples generated per conditioning frame: round(alpha * hop)."""
    if hop <= 0:
        raise ValueError("hop must be positive")
    return round_half_up(alpha * hop)


def rows_at(cond: np.ndarray, positions: np.ndarray) -> np.ndarray:
    """Sample conditioning columns at fractional frame positions.

    cond is (bins, frames); positions are frame coordinates, one per output
    row. Returns (len(positions), bins) float32, linearly interpolated and
    clamped to the valid frame range.
    """
    n_frames = cond.shape[1]
    tau = np.clip(np.asarray(positions, dtype=np.float64), 0.0, n_frames - 1)
    lo = np.floor(tau).astype(int)
    hi = np.minimum(lo + 1, n_frames - 1)
    w = (tau - lo).astype(np.float32)
    return (cond[:, lo] * (1.0 - w) + cond[:, hi] * w).T.astype(np.float32)


def upsample_conditioning(cond: np.ndarray, alpha: float, hop: int = 256) -> np.ndarray:
    """Per-sample conditioning matrix for a stretch by alpha.

    Output has frames * samples_per_frame(alpha, hop) rows of cond's bins;
    row r sits at frame coordinate r / samples_per_frame, so each frame
    spans exactly its share of the output timeline.
    """
    if not ALPHA_MIN <= alpha <= ALPHA_MAX:
        raise ValueError(f"alpha {alpha} outside supported range [{ALPHA_MIN}, {ALPHA_MAX}]")
    cond = np.asarray(cond)
    if cond.ndim != 2:
        raise ValueError(f"conditioning must be 2-D (bins, frames), got {cond.shape}")
    spf = samples_per_frame(alpha, hop)
    rows = cond.shape[1] * spf
    return rows_at(cond, np.arange(rows) / spf)

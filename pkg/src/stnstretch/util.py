"""Small shared helpers."""

from __future__ import annotations

import math

import numpy as np


def round_half_up(x: float) -> int:
    """Round to the nearest integer, halves away from zero.

    All length/position contracts in this package (stretched lengths,
    relocated onsets, samples per conditioning frame) use this rounding,
    not banker's rounding, so they stay consistent across modules.
    """
    return int(math.floor(x + 0.5)) if x >= 0 else -int(math.floor(-x + 0.5))


def db(power_ratio: float) -> float:
    return 10.0 * math.log10(power_ratio)


def rms(x: np.ndarray) -> float:
    x = np.asarray(x, dtype=np.float64)
    if x.size == 0:
        return 0.0
    return float(np.sqrt(np.mean(np.square(x))))


def is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0

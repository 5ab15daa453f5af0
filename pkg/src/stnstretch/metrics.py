"""Objective comparison metrics for stretched audio.

Long-term spectral balance is compared on third-octave band levels computed
from a Welch PSD estimate; onsets are compared by detecting transients in
both files and measuring how far each stretched onset sits from alpha times
its original position.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import welch

from .audio import Signal
from .loudness import LoudnessError, integrated_loudness
from .transients import detect_transients

# Preferred third-octave centers 10^(n/10) kHz, 100 Hz through 15.8 kHz.
THIRD_OCTAVE_CENTERS = 1000.0 * 10.0 ** (np.arange(-10, 13) / 10.0)
_EDGE = 10.0 ** (1.0 / 20.0)
WELCH_SEGMENT = 4096


def third_octave_levels(signal: Signal) -> np.ndarray:
    """Band power levels in dB at THIRD_OCTAVE_CENTERS; -inf for empty bands."""
    x = signal.require_mono()
    nperseg = min(WELCH_SEGMENT, x.size)
    freqs, psd = welch(x, fs=signal.sample_rate, nperseg=nperseg)
    levels = np.full(THIRD_OCTAVE_CENTERS.size, -np.inf)
    df = freqs[1] - freqs[0] if freqs.size > 1 else 1.0
    for i, center in enumerate(THIRD_OCTAVE_CENTERS):
        band = (freqs >= center / _EDGE) & (freqs < center * _EDGE)
        power = float(np.sum(psd[band]) * df)
        if power > 0.0:
            levels[i] = 10.0 * np.log10(power)
    return levels


@dataclass(frozen=True)
class SpectralDistance:
    band_centers_hz: np.ndarray
    delta_db: np.ndarray  # NaN where either file has no band energy
    mean_abs_db: float
    max_abs_db: float


def spectral_distance(a: Signal, b: Signal) -> SpectralDistance:
    """Third-octave level differences b minus a."""
    la = third_octave_levels(a)
    lb = third_octave_levels(b)
    valid = np.isfinite(la) & np.isfinite(lb)
    delta = np.full(la.shape, np.nan)
    delta[valid] = lb[valid] - la[valid]
    magnitudes = np.abs(delta[valid])
    return SpectralDistance(
        band_centers_hz=THIRD_OCTAVE_CENTERS.copy(),
        delta_db=delta,
        mean_abs_db=float(magnitudes.mean()) if magnitudes.size else 0.0,
        max_abs_db=float(magnitudes.max()) if magnitudes.size else 0.0,
    )


@dataclass(frozen=True)
class OnsetMappingReport:
    original_onsets_s: list[float]
    matched_errors_s: list[float]  # signed, one per matched original onset
    max_abs_error_s: float
    unmatched: int


def onset_mapping_error(
    original: Signal, stretched: Signal, alpha: float,
    match_window_s: float = 0.05,
) -> OnsetMappingReport:
    """For each onset detected in the original, distance of the nearest
    stretched onset from its alpha-mapped position."""
    rate = original.sample_rate
    src = [event.onset / rate for event in detect_transients(original)]
    dst = np.array([event.onset / stretched.sample_rate
                    for event in detect_transients(stretched)])

    errors: list[float] = []
    unmatched = 0
    for onset in src:
        expected = alpha * onset
        if dst.size == 0:
            unmatched += 1
            continue
        nearest = float(dst[np.argmin(np.abs(dst - expected))])
        error = nearest - expected
        if abs(error) <= match_window_s:
            errors.append(error)
        else:
            unmatched += 1
    max_err = max((abs(e) for e in errors), default=0.0)
    return OnsetMappingReport(
        original_onsets_s=src,
        matched_errors_s=errors,
        max_abs_error_s=max_err,
        unmatched=unmatched,
    )


def _loudness_or_none(signal: Signal) -> float | None:
    try:
        return integrated_loudness(signal)
    except LoudnessError:
        return None


def compare(original: Signal, stretched: Signal, alpha: float) -> dict:
    """Full metrics report as a JSON-ready dict."""
    if original.sample_rate != stretched.sample_rate:
        raise ValueError(
            f"sample rates differ: {original.sample_rate} vs {stretched.sample_rate}"
        )
    distance = spectral_distance(original, stretched)
    onsets = onset_mapping_error(original, stretched, alpha)
    return {
        "length_ratio": stretched.num_samples / max(original.num_samples, 1),
        "alpha": alpha,
        "spectral_distance": {
            "band_centers_hz": [float(c) for c in distance.band_centers_hz],
            "delta_db": [None if np.isnan(d) else float(d) for d in distance.delta_db],
            "mean_abs_db": distance.mean_abs_db,
            "max_abs_db": distance.max_abs_db,
        },
        "onsets": {
            "original_count": len(onsets.original_onsets_s),
            "matched_errors_s": onsets.matched_errors_s,
            "max_abs_error_s": onsets.max_abs_error_s,
            "unmatched": onsets.unmatched,
        },
        "loudness_lufs": {
            "original": _loudness_or_none(original),
            "stretched": _loudness_or_none(stretched),
        },
    }

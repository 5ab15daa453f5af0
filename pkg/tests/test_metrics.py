import json

import numpy as np
import pytest

from stnstretch import Signal
from stnstretch.metrics import (
    THIRD_OCTAVE_CENTERS,
    compare,
    onset_mapping_error,
    spectral_distance,
    third_octave_levels,
)

RATE = 44100


def test_band_centers():
    assert THIRD_OCTAVE_CENTERS.size == 23
    assert THIRD_OCTAVE_CENTERS[0] == pytest.approx(100.0)
    assert THIRD_OCTAVE_CENTERS[10] == pytest.approx(1000.0)
    assert THIRD_OCTAVE_CENTERS[-1] == pytest.approx(15848.93, rel=1e-4)
    ratios = THIRD_OCTAVE_CENTERS[1:] / THIRD_OCTAVE_CENTERS[:-1]
    assert np.allclose(ratios, 10 ** 0.1)


def test_tone_lands_in_its_band():
    t = np.arange(2 * RATE) / RATE
    levels = third_octave_levels(Signal(0.5 * np.sin(2 * np.pi * 1000 * t), RATE))
    assert np.argmax(levels) == 10
    # Sine power 0.125 -> about -9 dB.
    assert levels[10] == pytest.approx(10 * np.log10(0.125), abs=1.0)


def test_silence_has_no_levels():
    levels = third_octave_levels(Signal(np.zeros(RATE), RATE))
    assert not np.any(np.isfinite(levels))


def test_spectral_distance_of_identical_noise():
    rng = np.random.default_rng(0)
    x = Signal(np.clip(0.1 * rng.standard_normal(2 * RATE), -1, 1), RATE)
    dist = spectral_distance(x, x)
    assert dist.max_abs_db == 0.0


def test_spectral_distance_detects_gain():
    rng = np.random.default_rng(1)
    data = np.clip(0.1 * rng.standard_normal(2 * RATE), -1, 1)
    x = Signal(data, RATE)
    y = Signal(data * 0.5, RATE)
    dist = spectral_distance(x, y)
    assert dist.mean_abs_db == pytest.approx(6.02, abs=0.1)


def test_onset_mapping_exact_match():
    def clicks(times, length):
        x = np.zeros(length)
        for t in times:
            s = int(t * RATE)
            x[s:s + 16] += 0.9 * np.hanning(16)
        return Signal(x, RATE)

    original = clicks([0.3, 0.9], RATE * 2)
    stretched = clicks([0.6, 1.8], RATE * 4)
    report = onset_mapping_error(original, stretched, 2.0)
    assert len(report.original_onsets_s) == 2
    assert report.unmatched == 0
    assert report.max_abs_error_s < 0.005


def test_onset_mapping_unmatched():
    x = np.zeros(RATE)
    x[22050:22066] += 0.9 * np.hanning(16)
    original = Signal(x, RATE)
    silent = Signal(np.zeros(2 * RATE), RATE)
    report = onset_mapping_error(original, silent, 2.0)
    assert report.unmatched == 1
    assert report.matched_errors_s == []


def test_compare_report_is_json_ready():
    rng = np.random.default_rng(2)
    x = Signal(np.clip(0.1 * rng.standard_normal(RATE), -1, 1), RATE)
    y = Signal(np.clip(0.1 * rng.standard_normal(2 * RATE), -1, 1), RATE)
    report = compare(x, y, 2.0)
    encoded = json.dumps(report)  # must not raise
    decoded = json.loads(encoded)
    assert decoded["alpha"] == 2.0
    assert decoded["length_ratio"] == pytest.approx(2.0)
    assert len(decoded["spectral_distance"]["delta_db"]) == 23
    assert decoded["loudness_lufs"]["original"] is not None


def test_compare_rejects_rate_mismatch():
    x = Signal(np.zeros(RATE), RATE)
    y = Signal(np.zeros(RATE), 48000)
    with pytest.raises(ValueError):
        compare(x, y, 1.0)


def test_compare_silence_loudness_is_none():
    x = Signal(np.zeros(RATE), RATE)
    report = compare(x, x, 1.0)
    assert report["loudness_lufs"]["original"] is None

import numpy as np
import pytest

from stnstretch import PvConfig, Signal, stretch_sines
from stnstretch.util import round_half_up

RATE = 44100


def dominant_frequency(x: np.ndarray, rate: int) -> float:
    """Zero-padded windowed FFT argmax, an oracle independent of the vocoder."""
    n_fft = 1 << 22
    spec = np.abs(np.fft.rfft(x * np.hanning(x.size), n=n_fft))
    return np.argmax(spec) * rate / n_fft


def test_output_length_is_exact():
    x = Signal(np.sin(2 * np.pi * 440 * np.arange(30000) / RATE), RATE)
    for alpha in (1.0, 1.7, 2.0, 4.0, 8.0, 16.0):
        y = stretch_sines(x, alpha)
        assert y.num_samples == round_half_up(alpha * 30000)


def test_tone_frequency_preserved_at_four():
    n = RATE
    x = Signal(0.5 * np.sin(2 * np.pi * 440 * np.arange(n) / RATE), RATE)
    y = stretch_sines(x, 4.0)
    interior = y.data[RATE : 3 * RATE]
    assert dominant_frequency(interior, RATE) == pytest.approx(440.0, abs=1.0)


def test_tone_frequency_preserved_at_eight():
    n = RATE
    x = Signal(0.5 * np.sin(2 * np.pi * 523.25 * np.arange(n) / RATE), RATE)
    y = stretch_sines(x, 8.0)
    interior = y.data[2 * RATE : 6 * RATE]
    assert dominant_frequency(interior, RATE) == pytest.approx(523.25, abs=1.0)


def test_unit_stretch_is_near_identity(rng):
    x = 0.4 * np.sin(2 * np.pi * 440 * np.arange(RATE // 2) / RATE)
    y = stretch_sines(Signal(x, RATE), 1.0)
    err = np.sum((y.data - x) ** 2)
    assert 10 * np.log10(np.sum(x ** 2) / err) >= 100


def test_amplitude_roughly_preserved():
    x = Signal(0.5 * np.sin(2 * np.pi * 440 * np.arange(RATE) / RATE), RATE)
    y = stretch_sines(x, 4.0)
    interior = y.data[RATE : 3 * RATE]
    assert np.std(interior) == pytest.approx(0.5 / np.sqrt(2), rel=0.05)


def test_two_tone_chord_keeps_both_partials():
    t = np.arange(RATE) / RATE
    x = Signal(0.3 * np.sin(2 * np.pi * 440 * t) + 0.3 * np.sin(2 * np.pi * 660 * t), RATE)
    y = stretch_sines(x, 4.0)
    interior = y.data[RATE : 3 * RATE]
    spec = np.abs(np.fft.rfft(interior * np.hanning(interior.size), n=1 << 22))
    freqs = np.fft.rfftfreq(1 << 22, 1 / RATE)
    for target in (440.0, 660.0):
        band = (freqs > target - 5) & (freqs < target + 5)
        peak = freqs[band][np.argmax(spec[band])]
        assert peak == pytest.approx(target, abs=1.0)


def test_alpha_out_of_range_rejected():
    x = Signal(np.zeros(1000), RATE)
    with pytest.raises(ValueError):
        stretch_sines(x, 0.1)
    with pytest.raises(ValueError):
        stretch_sines(x, 17.0)


def test_silence_stretches_to_silence():
    y = stretch_sines(Signal(np.zeros(5000), RATE), 4.0)
    assert y.num_samples == 20000
    assert not np.any(y.data)


def test_short_input():
    y = stretch_sines(Signal(np.ones(50) * 0.1, RATE), 2.0)
    assert y.num_samples == 100


def test_custom_config_hop_derivation():
    cfg = PvConfig(window_length=4096)
    assert cfg.synthesis_hop == 1024
    assert cfg.analysis_hop(4.0) == 256
    assert cfg.analysis_hop(3.0) == 341  # round(1024/3)
    assert cfg.analysis_hop(16.0) == 64


def test_config_rejects_oversized_hop():
    with pytest.raises(ValueError):
        PvConfig(window_length=1024, synthesis_hop=1024)

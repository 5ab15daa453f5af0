"""Shared fixtures: deterministic synthetic test clips.

The six "realistic" clips cover the material classes the stretcher cares
about: plucked and struck tones (sharp attacks with harmonic decays), bells,
stationary and fluctuating noise textures, and mixtures of all three. They
are generated from fixed seeds so every run sees identical audio.
"""

from __future__ import annotations

import numpy as np
import pytest

from stnstretch import Signal

RATE = 44100


def _normalize(x: np.ndarray, peak: float = 0.8) -> np.ndarray:
    m = np.max(np.abs(x))
    return x * (peak / m) if m > 0 else x


def _pluck(freq: float, dur_s: float, rng: np.random.Generator) -> np.ndarray:
    """Karplus-Strong string: filtered-noise burst in a feedback delay line."""
    n = int(dur_s * RATE)
    period = int(RATE / freq)
    buf = rng.uniform(-1.0, 1.0, period)
    out = np.empty(n)
    for i in range(n):
        out[i] = buf[i % period]
        buf[i % period] = 0.996 * 0.5 * (buf[i % period] + buf[(i + 1) % period])
    return out


def _bell(freq: float, dur_s: float) -> np.ndarray:
    t = np.arange(int(dur_s * RATE)) / RATE
    mod = np.sin(2 * np.pi * freq * 1.4 * t) * np.exp(-t * 3.0) * 2.0
    return np.sin(2 * np.pi * freq * t + mod) * np.exp(-t * 1.8)


def _noise_burst(dur_s: float, rng: np.random.Generator, decay: float = 30.0) -> np.ndarray:
    t = np.arange(int(dur_s * RATE)) / RATE
    return rng.standard_normal(t.size) * np.exp(-t * decay)


def _place(canvas: np.ndarray, chunk: np.ndarray, at_s: float, gain: float = 1.0):
    start = int(at_s * RATE)
    end = min(start + chunk.size, canvas.size)
    canvas[start:end] += gain * chunk[: end - start]


def make_pluck_sequence() -> Signal:
    rng = np.random.default_rng(101)
    canvas = np.zeros(int(2.4 * RATE))
    for at, freq in zip((0.05, 0.65, 1.25, 1.85), (196.0, 246.9, 293.7, 392.0)):
        _place(canvas, _pluck(freq, 0.55, rng), at, 0.9)
    return Signal(_normalize(canvas), RATE)


def make_drum_pattern() -> Signal:
    rng = np.random.default_rng(202)
    canvas = np.zeros(int(2.2 * RATE))
    t = np.arange(int(0.25 * RATE)) / RATE
    kick = np.sin(2 * np.pi * (55 + 40 * np.exp(-t * 25)) * t) * np.exp(-t * 12)
    for at in (0.05, 0.60, 1.15, 1.70):
        _place(canvas, kick, at, 1.0)
    for at in (0.33, 0.88, 1.43, 1.98):
        _place(canvas, _noise_burst(0.12, rng, decay=45.0), at, 0.35)
    return Signal(_normalize(canvas), RATE)


def make_bell_chord() -> Signal:
    canvas = np.zeros(int(2.4 * RATE))
    for at, freq in zip((0.05, 0.45, 0.85), (523.25, 659.26, 783.99)):
        _place(canvas, _bell(freq, 1.5), at, 0.6)
    return Signal(_normalize(canvas), RATE)


def make_hiss_and_clicks() -> Signal:
    rng = np.random.default_rng(303)
    n = int(2.2 * RATE)
    canvas = 0.08 * rng.standard_normal(n)
    click = np.sin(2 * np.pi * 3200 * np.arange(90) / RATE) * np.hanning(90)
    for at in (0.4, 1.1, 1.8):
        _place(canvas, click, at, 0.8)
    return Signal(_normalize(canvas), RATE)


def make_synth_pad() -> Signal:
    t = np.arange(int(2.4 * RATE)) / RATE
    vibrato = 0.003 * np.sin(2 * np.pi * 5.0 * t)
    canvas = sum(
        a * np.sin(2 * np.pi * f * (t + vibrato))
        for f, a in ((220.0, 0.5), (277.2, 0.4), (329.6, 0.35), (440.0, 0.2))
    )
    rng = np.random.default_rng(404)
    canvas = canvas * (0.7 + 0.3 * np.sin(2 * np.pi * 0.4 * t)) + 0.01 * rng.standard_normal(t.size)
    return Signal(_normalize(canvas), RATE)


def make_rain_texture() -> Signal:
    rng = np.random.default_rng(505)
    n = int(2.2 * RATE)
    t = np.arange(n) / RATE
    base = rng.standard_normal(n)
    # single-pole lowpass plus slow amplitude drift
    out = np.empty(n)
    state = 0.0
    for i in range(n):
        state = 0.82 * state + 0.18 * base[i]
        out[i] = state
    out *= 1.0 + 0.25 * np.sin(2 * np.pi * 1.3 * t)
    return Signal(_normalize(out, 0.5), RATE)


CLIP_FACTORIES = {
    "pluck_sequence": make_pluck_sequence,
    "drum_pattern": make_drum_pattern,
    "bell_chord": make_bell_chord,
    "hiss_and_clicks": make_hiss_and_clicks,
    "synth_pad": make_synth_pad,
    "rain_texture": make_rain_texture,
}


@pytest.fixture(scope="session")
def real_clips() -> dict[str, Signal]:
    return {name: factory() for name, factory in CLIP_FACTORIES.items()}


@pytest.fixture()
def rng() -> np.random.Generator:
    return np.random.default_rng(20260818)

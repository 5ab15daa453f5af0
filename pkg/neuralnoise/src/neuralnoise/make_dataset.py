"""Synthesize a small three-flavor training dataset.

Run as `python -m neuralnoise.make_dataset OUT_DIR`. Three classes of clip
are generated in equal numbers, loosely imitating the kinds of material a
noise model should see: environmental textures (colored noise under slow
amplitude drift), rhythmic loops (band-passed burst patterns on a tempo
grid), and whispered-speech vowels (formant-filtered noise with syllable
envelopes). Everything is procedural and seeded, so the dataset is
reproducible and carries no licensing baggage; it is a stand-in at desk
scale, not a corpus.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np
from scipy.signal import lfilter

from .io import write_wav

RATE = 44100

# Formant center frequencies (Hz) for a few whispered vowels.
_VOWELS = {
    "a": (730, 1090, 2440),
    "e": (530, 1840, 2480),
    "i": (270, 2290, 3010),
    "o": (570, 840, 2410),
    "u": (300, 870, 2240),
}


def _normalize(x: np.ndarray, rms: float = 0.08) -> np.ndarray:
    x = x - np.mean(x)
    level = np.sqrt(np.mean(x ** 2))
    if level > 0:
        x = x * (rms / level)
    return np.clip(x, -0.99, 0.99)


def _onepole_lowpass(x: np.ndarray, coefficient: float) -> np.ndarray:
    return lfilter([1.0 - coefficient], [1.0, -coefficient], x)


def _resonator(x: np.ndarray, freq: float, bandwidth: float) -> np.ndarray:
    """Two-pole resonant filter."""
    r = np.exp(-np.pi * bandwidth / RATE)
    theta = 2.0 * np.pi * freq / RATE
    a = [1.0, -2.0 * r * np.cos(theta), r * r]
    return lfilter([1.0 - r], a, x)


def environmental(rng: np.random.Generator, n: int) -> np.ndarray:
    noise = rng.standard_normal(n)
    colored = _onepole_lowpass(noise, rng.uniform(0.8, 0.97))
    t = np.arange(n) / RATE
    drift = 1.0 + 0.6 * np.sin(2.0 * np.pi * rng.uniform(0.2, 0.8) * t
                               + rng.uniform(0.0, 2.0 * np.pi))
    gust = _onepole_lowpass(rng.standard_normal(n), 0.9995)
    gust = 1.0 + 0.8 * gust / max(np.max(np.abs(gust)), 1e-9)
    return _normalize(colored * drift * gust)


def loop(rng: np.random.Generator, n: int) -> np.ndarray:
    bpm = rng.uniform(100.0, 140.0)
    step = int(RATE * 60.0 / bpm / 2.0)  # eighth notes
    pattern = rng.random(8) < 0.7
    out = np.zeros(n)
    burst_len = int(0.09 * RATE)
    decay = np.exp(-np.arange(burst_len) / (0.02 * RATE))
    for k in range(0, n // step):
        if not pattern[k % 8]:
            continue
        center = rng.uniform(400.0, 4000.0)
        burst = _resonator(rng.standard_normal(burst_len), center, center * 0.5)
        stop = min(n, k * step + burst_len)
        out[k * step:stop] += (burst * decay)[:stop - k * step]
    bed = 0.1 * _onepole_lowpass(rng.standard_normal(n), 0.9)
    return _normalize(out + bed)


def whisper(rng: np.random.Generator, n: int) -> np.ndarray:
    out = np.zeros(n)
    pos = 0
    vowels = list(_VOWELS.values())
    while pos < n:
        length = int(rng.uniform(0.25, 0.5) * RATE)
        length = min(length, n - pos)
        formants = vowels[rng.integers(len(vowels))]
        segment = np.zeros(length)
        excitation = rng.standard_normal(length)
        for f in formants:
            segment += _resonator(excitation, f, 90.0)
        envelope = np.sin(np.pi * np.arange(length) / length) ** 0.7
        out[pos:pos + length] = segment * envelope
        pos += length
    return _normalize(out)


_CLASSES = {
    "environmental": environmental,
    "loops": loop,
    "speech": whisper,
}


def make_dataset(out_dir, clips_per_class: int = 8, seconds: float = 6.0,
                 seed: int = 0) -> dict:
    out_dir = Path(out_dir)
    n = int(seconds * RATE)
    manifest = {}
    for ci, (name, synth) in enumerate(sorted(_CLASSES.items())):
        class_dir = out_dir / name
        class_dir.mkdir(parents=True, exist_ok=True)
        files = []
        for k in range(clips_per_class):
            rng = np.random.Generator(np.random.PCG64([seed, ci, k]))
            path = class_dir / f"{name}_{k:02d}.wav"
            write_wav(path, synth(rng, n), RATE)
            files.append(str(path.relative_to(out_dir)))
        manifest[name] = files
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return manifest


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="python -m neuralnoise.make_dataset",
        description="synthesize a small seeded training dataset",
    )
    parser.add_argument("out_dir")
    parser.add_argument("--clips-per-class", type=int, default=8)
    parser.add_argument("--seconds", type=float, default=6.0)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)
    manifest = make_dataset(args.out_dir, args.clips_per_class, args.seconds, args.seed)
    total = sum(len(v) for v in manifest.values())
    print(f"wrote {total} clips ({args.seconds:.1f} s each) to {args.out_dir}",
          file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Transient handling: detect onsets in the transient component and copy each
event verbatim to its stretched position.

Transients are the one component that must not be stretched; slowing an attack
down smears it. Each detected event (onset plus a short extent around it) is
lifted from the input and written into the output at round(alpha * onset),
with short raised-cosine fades at both ends so the splice is click-free.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .audio import Signal
from .util import round_half_up

log = logging.getLogger(__name__)

ENVELOPE_WINDOW = 128
ENVELOPE_HOP = 64
THRESHOLD_FLOOR = 1e-3  # -60 dBFS; below this nothing counts as an event
EXTENT_FRACTION = 0.1  # event spans while envelope >= 10% of its peak
MAX_EXTENT_S = 0.1  # per side
CROSSFADE_S = 0.010


@dataclass(frozen=True)
class TransientEvent:
    """One detected event, in samples of the input signal."""

    onset: int
    start: int
    end: int  # exclusive

    def __post_init__(self):
        if not self.start <= self.onset < self.end:
            raise ValueError("event must contain its onset")


def short_time_rms(x: np.ndarray, window: int = ENVELOPE_WINDOW,
                   hop: int = ENVELOPE_HOP) -> np.ndarray:
    """RMS envelope over hopped windows; frame i covers [i*hop, i*hop+window)."""
    if x.size == 0:
        return np.zeros(0)
    n_frames = max(1, 1 + (x.size - window) // hop) if x.size >= window else 1
    padded = np.pad(x.astype(float) ** 2, (0, max(0, (n_frames - 1) * hop + window - x.size)))
    csum = np.concatenate(([0.0], np.cumsum(padded)))
    starts = np.arange(n_frames) * hop
    return np.sqrt((csum[starts + window] - csum[starts]) / window)


def detect_transients(signal: Signal) -> list[TransientEvent]:
    """Locate events as local maxima of the RMS envelope above an adaptive
    threshold (4x the median envelope, floored at -60 dBFS)."""
    x = signal.require_mono()
    env = short_time_rms(x)
    if env.size == 0:
        return []
    threshold = max(4.0 * float(np.median(env)), THRESHOLD_FLOOR)

    events: list[TransientEvent] = []
    max_extent = int(MAX_EXTENT_S * signal.sample_rate)
    i = 0
    while i < env.size:
        if env[i] < threshold:
            i += 1
            continue
        # Local maximum; a flat plateau yields its first frame.
        j = i
        while j + 1 < env.size and env[j + 1] == env[j]:
            j += 1
        left_ok = i == 0 or env[i - 1] < env[i]
        right_ok = j == env.size - 1 or env[j + 1] < env[j]
        if not (left_ok and right_ok):
            i += 1
            continue

        onset = i * ENVELOPE_HOP + ENVELOPE_WINDOW // 2
        floor = EXTENT_FRACTION * env[i]
        max_frames = max_extent // ENVELOPE_HOP
        lo = i
        while lo > 0 and i - lo < max_frames and env[lo - 1] >= floor:
            lo -= 1
        hi = j
        while hi + 1 < env.size and hi - j < max_frames and env[hi + 1] >= floor:
            hi += 1
        start = max(0, max(lo * ENVELOPE_HOP, onset - max_extent))
        end = min(x.size, min(hi * ENVELOPE_HOP + ENVELOPE_WINDOW, onset + max_extent))
        onset = min(max(onset, start), end - 1)
        events.append(TransientEvent(onset=onset, start=start, end=end))
        i = hi + 1
    return events


def _fade_ramps(n: int) -> np.ndarray:
    """Raised-cosine fade-in of n samples."""
    return np.sin(0.5 * np.pi * (np.arange(n) + 1) / (n + 1)) ** 2


def place_transients(
    transient: Signal,
    events: list[TransientEvent],
    alpha: float,
    out_length: int,
) -> Signal:
    """Copy each event into a silent buffer of out_length samples, onset moved
    to round(alpha * onset), waveform untouched apart from edge crossfades."""
    x = transient.require_mono()
    out = np.zeros(out_length)
    fade_len = int(CROSSFADE_S * transient.sample_rate)

    for event in events:
        chunk = x[event.start:event.end].copy()
        n = chunk.size
        fade = min(fade_len, n // 2)
        if fade > 0:
            ramp = _fade_ramps(fade)
            chunk[:fade] *= ramp
            chunk[-fade:] *= ramp[::-1]

        new_onset = round_half_up(alpha * event.onset)
        new_start = new_onset - (event.onset - event.start)
        if new_start < 0:
            chunk = chunk[-new_start:]
            new_start = 0
        if new_start + chunk.size > out_length:
            overflow = new_start + chunk.size - out_length
            log.warning("transient at %d clipped by %d samples at output edge",
                        event.onset, overflow)
            chunk = chunk[:out_length - new_start]
        if chunk.size > 0:
            out[new_start:new_start + chunk.size] += chunk
    return Signal(out, transient.sample_rate)


def stretch_transients(transient: Signal, alpha: float, out_length: int) -> Signal:
    """Detect and relocate in one call.

    At alpha = 1 the relocation map is the identity for every sample, not
    just for detected events, so the whole component passes through verbatim
    (padded or trimmed to out_length). That keeps the alpha = 1 pipeline a
    near-perfect round trip instead of discarding the energy between events.
    """
    if alpha == 1.0:
        x = transient.require_mono()
        out = x[:out_length] if x.size >= out_length else np.pad(x, (0, out_length - x.size))
        return Signal(out.copy(), transient.sample_rate)
    return place_transients(transient, detect_transients(transient), alpha, out_length)

"""Sines / transients / noise decomposition via soft spectral masks.

Tonalness of each time-frequency bin is estimated by comparing a
time-direction median (which preserves horizontal, tonal ridges) against a
frequency-direction median (which preserves vertical, impulsive ridges).
A sin^2 transition function turns tonalness and transientness into soft
masks S, T and the noise remainder N = 1 - S - T. Masks are applied to the
complex STFT, so the three masked inverses sum exactly to the input.

The decomposition runs in two stages: a long window first pulls out the
sines, then a short window splits the residual into transients and noise.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .audio import Signal, write_wav
from .matio import write_matrix, write_sidecar
from .spectral import (
    Spectrogram,
    StftConfig,
    istft,
    median_filter_freq,
    median_filter_time,
    stft,
)


@dataclass(frozen=True)
class MaskParams:
    """Soft-mask transition bounds and median filter lengths.

    beta_lower must be at least 0.5: tonalness and transientness sum to one,
    so with the transition region confined to the upper half at most one of
    S, T is nonzero per bin and N = 1 - S - T stays in [0, 1].
    """

    beta_upper: float
    beta_lower: float
    median_time: int  # frames
    median_freq: int  # bins

    def __post_init__(self):
        if not 0.0 < self.beta_upper <= 1.0:
            raise ValueError("beta_upper must lie in (0, 1]")
        if not 0.5 <= self.beta_lower < 1.0:
            raise ValueError("beta_lower must lie in [0.5, 1)")
        if self.beta_lower >= self.beta_upper:
            raise ValueError("beta_lower must be below beta_upper")
        if self.median_time < 1 or self.median_freq < 1:
            raise ValueError("median filter lengths must be positive")


def median_lengths_for(
    config: StftConfig,
    sample_rate: int,
    time_span_s: float = 0.2,
    freq_span_hz: float = 500.0,
) -> tuple[int, int]:
    """Median lengths covering the given spans, rounded to even counts (min 2)."""
    frames = time_span_s * sample_rate / config.hop
    bins = freq_span_hz * config.window_length / sample_rate
    as_even = lambda v: max(2, 2 * round(v / 2.0))
    return as_even(frames), as_even(bins)


@dataclass(frozen=True)
class TwoStageConfig:
    """Analysis configs and mask parameters for both decomposition stages."""

    stage1_stft: StftConfig
    stage1_masks: MaskParams
    stage2_stft: StftConfig
    stage2_masks: MaskParams

    def __post_init__(self):
        if self.stage1_stft.window_length <= self.stage2_stft.window_length:
            raise ValueError("stage 1 window must be longer than stage 2 window")


def default_two_stage(sample_rate: int) -> TwoStageConfig:
    """Stage 1: 8192-sample window (frequency resolution), betas (0.7, 0.8).
    Stage 2: 512-sample window (time resolution), betas (0.75, 0.85)."""
    stft1 = StftConfig(8192)
    stft2 = StftConfig(512)
    lh1, lv1 = median_lengths_for(stft1, sample_rate)
    lh2, lv2 = median_lengths_for(stft2, sample_rate)
    return TwoStageConfig(
        stage1_stft=stft1,
        stage1_masks=MaskParams(0.8, 0.7, lh1, lv1),
        stage2_stft=stft2,
        stage2_masks=MaskParams(0.85, 0.75, lh2, lv2),
    )


@dataclass(frozen=True)
class StnMasks:
    """Soft masks over one spectrogram grid; S + T + N = 1 elementwise."""

    sines: np.ndarray
    transients: np.ndarray
    noise: np.ndarray


@dataclass(frozen=True)
class StnComponents:
    """Time-domain components; they sum back to the decomposed input."""

    sines: Signal
    transients: Signal
    noise: Signal


def tonalness(x_time_med: np.ndarray, x_freq_med: np.ndarray) -> np.ndarray:
    """Per-bin tonalness: time-median magnitude over the sum of both medians.

    Bins where both medians vanish carry no evidence either way and are
    assigned 0 (they end up in the noise mask, which is harmless).
    """
    x_time_med = np.asarray(x_time_med, dtype=np.float64)
    x_freq_med = np.asarray(x_freq_med, dtype=np.float64)
    if x_time_med.shape != x_freq_med.shape:
        raise ValueError("median matrices must have identical shapes")
    total = x_time_med + x_freq_med
    out = np.zeros_like(total)
    np.divide(x_time_med, total, out=out, where=total > 0.0)
    return out


def transientness(r_s: np.ndarray) -> np.ndarray:
    return 1.0 - np.asarray(r_s, dtype=np.float64)


def soft_mask_function(a, beta_upper: float, beta_lower: float):
    """Piecewise sin^2 transition: 0 below beta_lower, 1 above beta_upper.

    Accepts scalars or arrays; continuous and nondecreasing in between.
    """
    if beta_lower >= beta_upper:
        raise ValueError("beta_lower must be below beta_upper")
    a = np.asarray(a, dtype=np.float64)
    t = (a - beta_lower) / (beta_upper - beta_lower)
    ramp = np.sin(0.5 * np.pi * np.clip(t, 0.0, 1.0)) ** 2
    out = np.where(a >= beta_upper, 1.0, np.where(a < beta_lower, 0.0, ramp))
    return float(out) if out.ndim == 0 else out


def build_masks(spec: Spectrogram, params: MaskParams) -> StnMasks:
    """Derive the S/T/N soft masks from one spectrogram.

    Median lengths are clamped to twice the available extent so short clips
    (fewer frames than the nominal 200 ms span) still decompose; the filter
    itself rejects longer windows outright.
    """
    mag = spec.magnitude()
    time_len = max(1, min(params.median_time, 2 * mag.shape[0]))
    freq_len = max(1, min(params.median_freq, 2 * mag.shape[1]))
    x_time = median_filter_time(mag, time_len)
    x_freq = median_filter_freq(mag, freq_len)
    r_s = tonalness(x_time, x_freq)
    sines = soft_mask_function(r_s, params.beta_upper, params.beta_lower)
    trans = soft_mask_function(transientness(r_s), params.beta_upper, params.beta_lower)
    return StnMasks(sines=sines, transients=trans, noise=1.0 - sines - trans)


def decompose_stage(
    x: Signal,
    config: StftConfig,
    params: MaskParams,
    target: str = "sines",
) -> tuple[Signal, Signal]:
    """One masking pass: returns (extracted, residual), summing back to x.

    target selects which mask extracts: "sines" for the long-window stage,
    "transients" for the short-window stage.
    """
    if target not in ("sines", "transients"):
        raise ValueError(f"unknown extraction target {target!r}")
    spec = stft(x, config)
    masks = build_masks(spec, params)
    mask = masks.sines if target == "sines" else masks.transients
    extracted = istft(spec.with_values(spec.values * mask))
    residual = istft(spec.with_values(spec.values * (1.0 - mask)))
    return extracted, residual


def decompose_stn(x: Signal, cfg: TwoStageConfig | None = None) -> StnComponents:
    """Two-stage decomposition into sines, transients and noise."""
    if cfg is None:
        cfg = default_two_stage(x.sample_rate)
    sines, residual = decompose_stage(x, cfg.stage1_stft, cfg.stage1_masks, "sines")
    transients, noise = decompose_stage(
        residual, cfg.stage2_stft, cfg.stage2_masks, "transients"
    )
    return StnComponents(sines=sines, transients=transients, noise=noise)


def dump_components(
    components: StnComponents,
    out_dir,
    masks: StnMasks | None = None,
    bits: int = 16,
) -> None:
    """Debug dump: component WAVs, optionally the masks in the binary matrix format."""
    os.makedirs(out_dir, exist_ok=True)
    for name in ("sines", "transients", "noise"):
        write_wav(os.path.join(out_dir, f"{name}.wav"), getattr(components, name), bits=bits)
    if masks is not None:
        for name in ("sines", "transients", "noise"):
            path = os.path.join(out_dir, f"mask_{name}.bin")
            write_matrix(path, getattr(masks, name))
        write_sidecar(
            os.path.join(out_dir, "masks.json"),
            {"format": "rows=frames, cols=bins, float32 little-endian", "files": [
                "mask_sines.bin", "mask_transients.bin", "mask_noise.bin"]},
        )

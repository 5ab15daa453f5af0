"""Hybrid time-scale modification for large stretch factors.

The signal is decomposed into sines, transients, and noise with soft
spectral masks; each component is stretched on its own path (identity
phase-locking phase vocoder, verbatim transient relocation, conditioned
noise resynthesis) and the three are reshaped and mixed back together.
"""

__version__ = "0.1.0"

from .audio import AudioFormatError, Signal, mono, read_wav, resample, stereo, write_wav
from .cqt import CqtConfig, CqtFeatures, cqt
from .decompose import (
    MaskParams,
    StnComponents,
    TwoStageConfig,
    decompose_stn,
    default_two_stage,
    soft_mask_function,
)
from .envelope import reshape_to_envelope
from .loudness import LoudnessError, integrated_loudness, normalize_loudness
from .noise import (
    NeuralBackendError,
    NoiseBackendError,
    NoiseStretchRequest,
    samples_per_frame,
    stretch_noise,
    stretch_noise_spectral,
)
from .pipeline import TsmConfig, TsmRequest, TsmResult, tsm, tsm_detailed
from .sines import PvConfig, stretch_sines
from .spectral import Spectrogram, StftConfig, istft, stft
from .transients import TransientEvent, detect_transients, stretch_transients

__all__ = [
    "AudioFormatError",
    "CqtConfig",
    "CqtFeatures",
    "LoudnessError",
    "MaskParams",
    "NeuralBackendError",
    "NoiseBackendError",
    "NoiseStretchRequest",
    "PvConfig",
    "Signal",
    "Spectrogram",
    "StftConfig",
    "StnComponents",
    "TransientEvent",
    "TsmConfig",
    "TsmRequest",
    "TsmResult",
    "TwoStageConfig",
    "cqt",
    "decompose_stn",
    "default_two_stage",
    "detect_transients",
    "integrated_loudness",
    "istft",
    "mono",
    "normalize_loudness",
    "read_wav",
    "resample",
    "reshape_to_envelope",
    "samples_per_frame",
    "soft_mask_function",
    "stereo",
    "stft",
    "stretch_noise",
    "stretch_noise_spectral",
    "stretch_sines",
    "stretch_transients",
    "tsm",
    "tsm_detailed",
    "write_wav",
    "__version__",
]

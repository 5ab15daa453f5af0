"""Toy autoregressive synthesizer for time-stretched noise textures.

A small dilated-convolution network with mixture-of-logistics output,
conditioned on a log-frequency magnitude matrix. Stretching happens in the
conditioning: the network generates round(alpha * hop) samples per
conditioning frame, so the model itself never sees the stretch factor.

The package speaks the host tool's file protocol (request directories with
noise.wav, cond.bin, req.json) and is otherwise self-contained: it has its
own WAV and matrix I/O, its own feature extractor for training, a training
loop with checkpointing, and ancestral or beam-search sampling.
"""

from .condition import samples_per_frame, upsample_conditioning
from .generate import (
    BeamConfig, ancestral_generate, beam_search_generate, crest_factor, generate,
)
from .model import SynthConfig, SynthModel
from .mol import mol_log_prob, sample_mol, sample_mol_batch
from .protocol import ProtocolError, serve_request_dir
from .training import (
    Checkpoint, CheckpointError, TrainResult, TrainSpec, TrainingError,
    load_checkpoint, load_model, save_checkpoint, train,
)

__version__ = "0.1.0"

__all__ = [
    "BeamConfig", "Checkpoint", "CheckpointError", "ProtocolError",
    "SynthConfig", "SynthModel", "TrainResult", "TrainSpec", "TrainingError",
    "ancestral_generate", "beam_search_generate", "crest_factor", "generate",
    "load_checkpoint", "load_model", "mol_log_prob", "sample_mol",
    "sample_mol_batch", "samples_per_frame", "save_checkpoint",
    "serve_request_dir", "train", "upsample_conditioning",
]

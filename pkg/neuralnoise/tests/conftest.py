import json
from pathlib import Path

import numpy as np
import pytest
import torch
from scipy.signal import lfilter

from neuralnoise import SynthConfig, SynthModel, TrainSpec, train
from neuralnoise.io import write_matrix, write_wav

RATE = 44100

# Small channel counts keep every test fast; the receptive field is still
# the full 1024 samples because the layer count is untouched.
TINY = dict(residual_channels=12, skip_channels=16, cond_embed_channels=8)


def lowpass_noise(seed: int, n: int, coefficient: float = 0.88, rms: float = 0.15) -> np.ndarray:
    rng = np.random.default_rng(seed)
    y = lfilter([1.0 - coefficient], [1.0, -coefficient], rng.standard_normal(n))
    return (y * (rms / np.sqrt(np.mean(y ** 2)))).astype(np.float64)


def make_model(seed: int = 0, **overrides) -> SynthModel:
    config = SynthConfig(**{**TINY, **overrides})
    torch.manual_seed(seed)
    model = SynthModel(config)
    model.eval()
    return model


def write_request(directory: Path, cond: np.ndarray, alpha: float, seed: int = 0,
                  hop: int = 256, noise_samples: int | None = None) -> Path:
    directory.mkdir(parents=True, exist_ok=True)
    n = noise_samples if noise_samples is not None else cond.shape[1] * 256
    write_wav(directory / "noise.wav", lowpass_noise(3, n), RATE)
    write_matrix(directory / "cond.bin", cond.astype(np.float32))
    (directory / "req.json").write_text(
        json.dumps({"alpha": alpha, "hop": hop, "seed": seed})
    )
    return directory


@pytest.fixture(scope="session")
def noise_dataset(tmp_path_factory) -> Path:
    root = tmp_path_factory.mktemp("noise_dataset")
    for k in range(5):
        clip = lowpass_noise(100 + k, int(2.5 * RATE), coefficient=0.85 + 0.02 * k)
        write_wav(root / f"noise_{k}.wav", clip, RATE)
    return root


@pytest.fixture(scope="session")
def trained(noise_dataset):
    """One desk-scale training run shared by everything that needs a model."""
    spec = TrainSpec(
        dataset_dirs=(str(noise_dataset),),
        iterations=400,
        batch_size=3,
        segment_length=1536,
        learning_rate=1e-3,
        eval_every=100,
        eval_segments=8,
        seed=1,
        model=SynthConfig(**TINY),
    )
    return train(spec), spec

"""Desk-scale training: dataset ingestion, the optimization loop, checkpoints.

Audio is pulled from directories of WAV files, downmixed to mono and
resampled to 44.1 kHz, and paired with conditioning features computed once
per clip. Batches are random segments; the loss is the negative log
density of each sample under the model's mixture output, averaged over the
positions that have a full receptive field of context.

A held-out subset of clips is never trained on. Its NLL is evaluated on a
fixed set of segments before the first update and at regular intervals, so
a training curve is always available and resuming from a checkpoint can be
checked for continuity.

Checkpoints are torch.save archives whose top-level dict carries the
version header "neuralnoise-ckpt/1" in its "format" key, along with the
model config, weights, optimizer state, iteration count, the evaluation
history, and the training data's crest factor (used downstream to judge
whether sampling produced spurious impulses).
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import torch
from scipy.signal import resample_poly

from . import features
from .condition import rows_at
from .generate import crest_factor
from .io import read_wav_mono
from .model import SynthConfig, SynthModel
from .mol import mol_log_prob

CHECKPOINT_FORMAT = "neuralnoise-ckpt/1"
GRAD_CLIP = 5.0


class TrainingError(RuntimeError):
    """Training cannot proceed (bad spec, unusable dataset)."""


class CheckpointError(RuntimeError):
    """Checkpoint file is missing, malformed, or from a different format."""


@dataclass(frozen=True)
class TrainSpec:
    dataset_dirs: tuple[str, ...]
    iterations: int = 20_000
    batch_size: int = 4
    segment_length: int = 2048
    learning_rate: float = 2e-3
    sample_rate: int = 44100
    holdout_fraction: float = 0.1
    eval_every: int = 200
    eval_segments: int = 16
    seed: int = 0
    model: SynthConfig = field(default_factory=SynthConfig)

    def __post_init__(self):
        if not self.dataset_dirs:
            raise TrainingError("no dataset directories given")
        if self.sample_rate != features.SAMPLE_RATE:
            raise TrainingError(f"training runs at {features.SAMPLE_RATE} Hz only")
        if self.iterations < 1 or self.batch_size < 1 or self.eval_every < 1:
            raise TrainingError("iterations, batch_size, and eval_every must be positive")
        if self.segment_length <= self.model.receptive_field:
            raise TrainingError(
                f"segment_length {self.segment_length} must exceed the receptive "
                f"field of {self.model.receptive_field} samples"
            )
        if not 0.0 < self.holdout_fraction < 1.0:
            raise TrainingError("holdout_fraction must be in (0, 1)")
        if self.model.conditioning_bins != features.N_BINS:
            raise TrainingError(
                f"model expects {self.model.conditioning_bins} conditioning bins "
                f"but the feature extractor produces {features.N_BINS}"
            )


@dataclass
class _Clip:
    audio: np.ndarray  # float32, 44.1 kHz mono
    cond: np.ndarray   # (bins, frames) float32, compressed


@dataclass
class TrainResult:
    model: SynthModel
    history: list[tuple[int, float]]  # (iteration, held-out NLL)
    train_crest: float
    elapsed_s: float
    checkpoint_path: Path | None = None

    @property
    def initial_nll(self) -> float:
        return self.history[0][1]

    @property
    def final_nll(self) -> float:
        return self.history[-1][1]

    @property
    def nll_decrease(self) -> float:
        """Fractional drop in held-out NLL from the pre-training evaluation."""
        return (self.initial_nll - self.final_nll) / abs(self.initial_nll)


def _resample(audio: np.ndarray, rate: int, target: int) -> np.ndarray:
    if rate == target:
        return audio
    g = math.gcd(target, rate)
    return resample_poly(audio, target // g, rate // g).astype(np.float32)


def _load_clips(spec: TrainSpec) -> list[_Clip]:
    min_length = spec.segment_length + features.HOP
    paths = []
    for d in spec.dataset_dirs:
        root = Path(d)
        if not root.is_dir():
            raise TrainingError(f"dataset directory not found: {root}")
        paths.extend(sorted(root.rglob("*.wav")))

    clips = []
    for path in paths:
        audio, rate = read_wav_mono(path)
        audio = _resample(audio, rate, spec.sample_rate)
        if audio.size < min_length:
            continue
        clips.append(_Clip(audio.astype(np.float32), features.conditioning(audio)))
    if not clips:
        raise TrainingError(
            f"dataset is empty: no .wav files of at least {min_length} samples "
            f"under {', '.join(str(d) for d in spec.dataset_dirs)}"
        )
    return clips


def _split(clips: list[_Clip], spec: TrainSpec) -> tuple[list[_Clip], list[_Clip]]:
    if len(clips) == 1:
        # A single clip still gets a held-out region: carve off its tail.
        audio = clips[0].audio
        cut = int(audio.size * 0.75)
        if min(cut, audio.size - cut) < spec.segment_length + features.HOP:
            raise TrainingError("dataset too small to carve out a held-out split")
        head, tail = audio[:cut], audio[cut:]
        return ([_Clip(head, features.conditioning(head))],
                [_Clip(tail, features.conditioning(tail))])
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    order = rng.permutation(len(clips))
    n_hold = max(1, round(spec.holdout_fraction * len(clips)))
    hold = [clips[i] for i in order[:n_hold]]
    train = [clips[i] for i in order[n_hold:]]
    return train, hold


def _segment(clip: _Clip, offset: int, length: int) -> tuple[np.ndarray, np.ndarray]:
    x = clip.audio[offset:offset + length]
    tau = (offset + np.arange(length)) / features.HOP
    return x, rows_at(clip.cond, tau)


def _draw_batch(rng: np.random.Generator, clips: list[_Clip], spec: TrainSpec):
    xs, conds = [], []
    for _ in range(spec.batch_size):
        clip = clips[rng.integers(len(clips))]
        offset = int(rng.integers(0, clip.audio.size - spec.segment_length + 1))
        x, rows = _segment(clip, offset, spec.segment_length)
        xs.append(x)
        conds.append(rows.T)
    return (torch.from_numpy(np.stack(xs)),
            torch.from_numpy(np.stack(conds)))


def _eval_set(clips: list[_Clip], spec: TrainSpec):
    rng = np.random.Generator(np.random.PCG64(spec.seed + 1))
    xs, conds = [], []
    for _ in range(spec.eval_segments):
        clip = clips[rng.integers(len(clips))]
        offset = int(rng.integers(0, clip.audio.size - spec.segment_length + 1))
        x, rows = _segment(clip, offset, spec.segment_length)
        xs.append(x)
        conds.append(rows.T)
    return (torch.from_numpy(np.stack(xs)),
            torch.from_numpy(np.stack(conds)))


def _nll(model: SynthModel, x: torch.Tensor, cond: torch.Tensor) -> torch.Tensor:
    warmup = model.config.receptive_field
    params = model(x, cond)
    return -mol_log_prob(params[:, warmup:, :], x[:, warmup:]).mean()


def train(
    spec: TrainSpec,
    out_path: str | Path | None = None,
    resume: str | Path | None = None,
    log_fn=None,
) -> TrainResult:
    """Run the optimization loop and return the model with its eval history.

    With resume, weights, optimizer state, iteration counter, and history
    are restored from the checkpoint and training continues toward
    spec.iterations. The dataset split and evaluation segments derive only
    from the TrainSpec, so a resumed run evaluates on the same data.
    """
    say = log_fn or (lambda msg: None)
    started = time.monotonic()

    clips = _load_clips(spec)
    train_clips, hold_clips = _split(clips, spec)
    say(f"dataset: {len(train_clips)} training clips, {len(hold_clips)} held out")
    train_crest = crest_factor(np.concatenate([c.audio for c in train_clips]))

    torch.manual_seed(spec.seed)
    model = SynthModel(spec.model)
    optimizer = torch.optim.Adam(model.parameters(), lr=spec.learning_rate)
    start_iter = 0
    history: list[tuple[int, float]] = []

    if resume is not None:
        ckpt = load_checkpoint(resume)
        if ckpt.config != spec.model:
            raise CheckpointError(
                "checkpoint model config does not match the requested one"
            )
        model.load_state_dict(ckpt.state_dict)
        if ckpt.optimizer is not None:
            optimizer.load_state_dict(ckpt.optimizer)
        start_iter = ckpt.iterations
        history = list(ckpt.history)
        say(f"resumed from {resume} at iteration {start_iter}")
    if start_iter >= spec.iterations:
        raise TrainingError(
            f"checkpoint is already at iteration {start_iter}; "
            f"nothing to do for a target of {spec.iterations}"
        )

    eval_x, eval_cond = _eval_set(hold_clips, spec)

    def evaluate(iteration: int) -> float:
        model.eval()
        with torch.no_grad():
            value = float(_nll(model, eval_x, eval_cond))
        model.train()
        history.append((iteration, value))
        return value

    say(f"iteration {start_iter}: held-out NLL {evaluate(start_iter):.4f}")

    rng = np.random.Generator(np.random.PCG64(spec.seed + 2 + start_iter))
    model.train()
    running = None
    for i in range(start_iter, spec.iterations):
        x, cond = _draw_batch(rng, train_clips, spec)
        loss = _nll(model, x, cond)
        optimizer.zero_grad()
        loss.backward()
        torch.nn.utils.clip_grad_norm_(model.parameters(), GRAD_CLIP)
        optimizer.step()

        value = float(loss.detach())
        running = value if running is None else 0.95 * running + 0.05 * value
        if (i + 1) % spec.eval_every == 0 and (i + 1) < spec.iterations:
            say(f"iteration {i + 1}: held-out NLL {evaluate(i + 1):.4f} "
                f"(train {running:.4f})")

    final = evaluate(spec.iterations)
    say(f"iteration {spec.iterations}: held-out NLL {final:.4f}")
    model.eval()

    result = TrainResult(
        model=model,
        history=history,
        train_crest=train_crest,
        elapsed_s=time.monotonic() - started,
    )
    if out_path is not None:
        save_checkpoint(out_path, model, spec.iterations, optimizer=optimizer,
                        history=history, train_crest=train_crest)
        result.checkpoint_path = Path(out_path)
        say(f"checkpoint written to {out_path}")
    return result


# ---------------------------------------------------------------------------
# Checkpoints
# ---------------------------------------------------------------------------

@dataclass
class Checkpoint:
    config: SynthConfig
    state_dict: dict
    iterations: int
    history: list[tuple[int, float]]
    train_crest: float | None
    optimizer: dict | None


def save_checkpoint(path, model: SynthModel, iterations: int, optimizer=None,
                    history=(), train_crest: float | None = None) -> None:
    payload = {
        "format": CHECKPOINT_FORMAT,
        "config": asdict(model.config),
        "state_dict": model.state_dict(),
        "iterations": int(iterations),
        "history": [(int(i), float(v)) for i, v in history],
        "train_crest": None if train_crest is None else float(train_crest),
        "optimizer": None if optimizer is None else optimizer.state_dict(),
    }
    torch.save(payload, path)


def load_checkpoint(path) -> Checkpoint:
    try:
        payload = torch.load(path, map_location="cpu", weights_only=True)
    except FileNotFoundError:
        raise CheckpointError(f"checkpoint not found: {path}") from None
    except Exception as exc:
        raise CheckpointError(f"unreadable checkpoint {path}: {exc}") from exc
    if not isinstance(payload, dict) or payload.get("format") != CHECKPOINT_FORMAT:
        raise CheckpointError(
            f"{path} is not a {CHECKPOINT_FORMAT} checkpoint"
        )
    return Checkpoint(
        config=SynthConfig(**payload["config"]),
        state_dict=payload["state_dict"],
        iterations=int(payload["iterations"]),
        history=[(int(i), float(v)) for i, v in payload.get("history", [])],
        train_crest=payload.get("train_crest"),
        optimizer=payload.get("optimizer"),
    )


def load_model(path) -> tuple[SynthModel, Checkpoint]:
    ckpt = load_checkpoint(path)
    model = SynthModel(ckpt.config)
    model.load_state_dict(ckpt.state_dict)
    model.eval()
    return model, ckpt

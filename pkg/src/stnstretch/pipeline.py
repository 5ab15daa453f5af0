"""End-to-end time-scale modification.

Per channel: decompose into sines/transients/noise, stretch each component on
its own path (phase vocoder, verbatim relocation, noise resynthesis), reshape
the stretched sines and noise to the time-dilated envelopes of their
unstretched counterparts, then trim or pad everything to the single authority
length round(alpha * input length) and sum. Stereo channels run independently
with identical settings and seeds, which keeps balance and phase relations
intact and makes identical channels produce identical outputs.

Transients skip the envelope stage on purpose: their waveforms are copied
verbatim and reshaping them would defeat that.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .audio import Signal
from .decompose import TwoStageConfig, decompose_stn, default_two_stage
from .envelope import reshape_to_envelope
from .noise import NoiseStretchRequest, stretch_noise
from .sines import PvConfig, stretch_sines
from .transients import stretch_transients
from .util import round_half_up

ALPHA_MIN = 1.0
ALPHA_MAX = 16.0

COMPONENT_NAMES = ("sines", "transients", "noise")


@dataclass(frozen=True)
class TsmConfig:
    """Pipeline settings; None for the two-stage config means per-rate defaults."""

    two_stage: TwoStageConfig | None = None
    pv: PvConfig = field(default_factory=PvConfig)
    backend: str = "spectral"
    neural_command: tuple[str, ...] = ()
    seed: int = 0
    envelope: bool = True


@dataclass(frozen=True)
class TsmRequest:
    input: Signal
    alpha: float
    config: TsmConfig = field(default_factory=TsmConfig)

    def __post_init__(self):
        if not ALPHA_MIN <= self.alpha <= ALPHA_MAX:
            raise ValueError(
                f"alpha {self.alpha} outside supported range [{ALPHA_MIN}, {ALPHA_MAX}]"
            )


@dataclass(frozen=True)
class TsmResult:
    output: Signal
    alpha: float
    input_length: int
    component_energy: dict[str, float]

    @property
    def output_length(self) -> int:
        return self.output.num_samples


def _fit(x: np.ndarray, length: int) -> np.ndarray:
    if x.size >= length:
        return x[:length]
    return np.pad(x, (0, length - x.size))


def _stretch_channel(
    x: Signal, alpha: float, config: TsmConfig
) -> dict[str, np.ndarray]:
    """Stretched component signals for one mono channel, all at the target length."""
    target = round_half_up(alpha * x.num_samples)
    two_stage = config.two_stage or default_two_stage(x.sample_rate)
    components = decompose_stn(x, two_stage)

    sines_out = stretch_sines(components.sines, alpha, config.pv)
    transients_out = stretch_transients(components.transients, alpha, target)
    noise_out = stretch_noise(
        NoiseStretchRequest(
            noise=components.noise,
            alpha=alpha,
            backend=config.backend,
            seed=config.seed,
            neural_command=config.neural_command,
        )
    )

    if config.envelope:
        sines_out = reshape_to_envelope(sines_out, components.sines, alpha, ceiling=x)
        noise_out = reshape_to_envelope(noise_out, components.noise, alpha, ceiling=x)

    return {
        "sines": _fit(sines_out.require_mono(), target),
        "transients": _fit(transients_out.require_mono(), target),
        "noise": _fit(noise_out.require_mono(), target),
    }


def tsm_detailed(request: TsmRequest) -> TsmResult:
    """Run the pipeline and report the stretched-path energy split alongside
    the mixed output."""
    signal = request.input
    alpha = request.alpha
    energy = {name: 0.0 for name in COMPONENT_NAMES}

    channels = []
    for index in range(signal.channels):
        parts = _stretch_channel(signal.channel(index), alpha, request.config)
        for name in COMPONENT_NAMES:
            energy[name] += float(np.sum(parts[name] ** 2))
        channels.append(sum(parts[name] for name in COMPONENT_NAMES))

    data = channels[0] if signal.channels == 1 else np.stack(channels)
    return TsmResult(
        output=Signal(data, signal.sample_rate),
        alpha=alpha,
        input_length=signal.num_samples,
        component_energy=energy,
    )


def tsm(request: TsmRequest) -> Signal:
    """Time-stretch a mono or stereo signal by request.alpha."""
    return tsm_detailed(request).output

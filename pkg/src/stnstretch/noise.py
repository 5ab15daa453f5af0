"""Noise-component stretching.

Two interchangeable backends honor the same contract: the output carries
samples_per_frame(alpha, hop) audio samples for every frame of the CQT
conditioning extracted from the input noise.

The spectral backend (default) resynthesizes filtered white noise directly:
per synthesis frame it interpolates the conditioning magnitudes at the
time-dilated position, maps them onto linear STFT bins, pairs them with
random phases, and overlap-adds. Deterministic for a fixed seed.

The neural backend shells out to an external synthesizer through a file
protocol (request directory with noise.wav, cond.bin, req.json; response
out.wav and status.json) and validates the returned length.
"""

from __future__ import annotations

import json
import logging
import subprocess
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .audio import Signal, read_wav, write_wav
from .cqt import CqtConfig, CqtFeatures, cqt, white_noise_gains
from .matio import write_matrix
from .spectral import StftConfig, Spectrogram, istft
from .util import round_half_up

log = logging.getLogger(__name__)

SYNTH_WINDOW = 1024
SYNTH_HOP = 256
ALPHA_MIN = 1.0
ALPHA_MAX = 16.0
DEFAULT_TIMEOUT_S = 600.0


class NoiseBackendError(RuntimeError):
    """A noise backend could not produce valid output."""


class NeuralBackendError(NoiseBackendError):
    """The neural synthesizer is unreachable or returned a bad response."""


def samples_per_frame(alpha: float, hop: int) -> int:
    """Audio samples generated per conditioning frame: round(alpha * hop)."""
    if hop <= 0:
        raise ValueError("hop must be positive")
    return round_half_up(alpha * hop)


@dataclass(frozen=True)
class NoiseStretchRequest:
    noise: Signal
    alpha: float
    backend: str = "spectral"
    cqt: CqtFeatures | None = None
    seed: int = 0
    neural_command: tuple[str, ...] = field(default=())
    timeout_s: float = DEFAULT_TIMEOUT_S

    def __post_init__(self):
        if not ALPHA_MIN <= self.alpha <= ALPHA_MAX:
            raise ValueError(
                f"alpha {self.alpha} outside supported range [{ALPHA_MIN}, {ALPHA_MAX}]"
            )
        if self.backend not in ("spectral", "neural"):
            raise ValueError(f"unknown noise backend {self.backend!r}")
        if self.cqt is not None and self.cqt.hop != 256:
            raise ValueError("conditioning hop must be 256 samples")

    def conditioning(self) -> CqtFeatures:
        return self.cqt if self.cqt is not None else cqt(self.noise)


_mapping_cache: dict[tuple, np.ndarray] = {}


def _mapping_matrix(config: CqtConfig, sample_rate: int, n_bins: int) -> np.ndarray:
    """(rfft bins x CQT bins) matrix averaging CQT power into rfft bands.

    Each synthesis rfft bin takes the mean power of every CQT bin whose
    center falls inside its band. Below roughly 3 kHz the constant-Q bins are
    much narrower than the fixed rfft bands, and averaging them (rather than
    point-sampling one) keeps the resynthesized band level tied to the band's
    total energy instead of a single narrow sliver of it. Bands that contain
    no CQT center (very low frequencies, and everything above ~3 kHz where
    CQT bins are the wider ones) fall back to linear interpolation.
    """
    key = (sample_rate, config.f_min, config.resolve_f_max(sample_rate),
           config.bins_per_octave)
    cached = _mapping_cache.get(key)
    if cached is not None:
        return cached

    centers = config.center_frequencies(sample_rate)[:n_bins]
    bin_freqs = np.fft.rfftfreq(SYNTH_WINDOW, d=1.0 / sample_rate)
    half_width = 0.5 * sample_rate / SYNTH_WINDOW
    matrix = np.zeros((bin_freqs.size, n_bins))
    coords = config.bins_per_octave * np.log2(
        np.maximum(bin_freqs, config.f_min) / config.f_min
    )
    coords = np.clip(coords, 0.0, n_bins - 1)
    for b, f_b in enumerate(bin_freqs):
        members = np.nonzero(np.abs(centers - f_b) < half_width)[0]
        if members.size:
            matrix[b, members] = 1.0 / members.size
        else:
            lo = int(coords[b])
            hi = min(lo + 1, n_bins - 1)
            frac = coords[b] - lo
            matrix[b, lo] += 1.0 - frac
            matrix[b, hi] += frac
    _mapping_cache[key] = matrix
    return matrix


def _conditioning_to_bin_gains(
    cond_linear: np.ndarray, config: CqtConfig, sample_rate: int
) -> np.ndarray:
    """Map CQT magnitudes (bins x frames) onto rfft-bin gains for the
    synthesis window.

    Constant-Q bandwidths grow with frequency, so a flat noise floor shows up
    in raw CQT magnitudes tilted by sqrt(f). Dividing each bin by its
    white-noise gain (the kernel l2 norm) flattens that exactly, leaving
    sqrt(PSD) estimates; those are band-averaged in the power domain onto the
    synthesis rfft grid. Absolute level is fixed afterwards by an overall RMS
    match, so only the shape matters here.
    """
    whitened = cond_linear / white_noise_gains(config, sample_rate)[:, None]
    matrix = _mapping_matrix(config, sample_rate, cond_linear.shape[0])
    return np.sqrt(matrix @ (whitened ** 2))


def stretch_noise_spectral(request: NoiseStretchRequest) -> Signal:
    """Deterministic spectral resynthesis; output length is exactly
    frames(conditioning) * samples_per_frame(alpha, hop)."""
    x = request.noise.require_mono()
    rate = request.noise.sample_rate
    features = request.conditioning()
    spf = samples_per_frame(request.alpha, features.hop)
    out_length = features.frames * spf
    input_rms = float(np.sqrt(np.mean(x ** 2))) if x.size else 0.0
    if out_length == 0 or input_rms == 0.0:
        return Signal(np.zeros(out_length), rate)
    if request.alpha == 1.0:
        # Unit stretch is a passthrough (padded to the frame grid); there is
        # nothing to resynthesize and the round trip should stay transparent.
        out = x[:out_length] if x.size >= out_length else np.pad(x, (0, out_length - x.size))
        return Signal(out.copy(), rate)

    cond = features.linear_magnitude()  # (bins, frames)
    n_syn = 1 + out_length // SYNTH_HOP

    # Conditioning position for synthesis frame j: walk the input at the
    # realized rate spf/hop (equal to alpha up to the per-frame rounding).
    tau = np.arange(n_syn) * (features.hop / spf)
    tau = np.clip(tau, 0.0, features.frames - 1)
    i_lo = np.floor(tau).astype(int)
    i_hi = np.minimum(i_lo + 1, features.frames - 1)
    w_hi = tau - i_lo

    bin_gains = _conditioning_to_bin_gains(cond, features.config, rate)
    mags = bin_gains[:, i_lo] * (1.0 - w_hi) + bin_gains[:, i_hi] * w_hi  # (bins, frames)

    rng = np.random.Generator(np.random.PCG64(request.seed))
    phases = rng.uniform(0.0, 2.0 * np.pi, size=mags.shape)
    values = (mags * np.exp(1j * phases)).T  # (frames, bins)
    # DC and Nyquist rows of an rfft spectrum are real; keep a random sign.
    values[:, 0] = np.sign(np.cos(phases[0])) * mags[0]
    values[:, -1] = np.sign(np.cos(phases[-1])) * mags[-1]

    spec = Spectrogram(
        values=values,
        config=StftConfig(SYNTH_WINDOW, SYNTH_HOP),
        sample_rate=rate,
        original_length=out_length,
    )
    y = istft(spec).require_mono()

    out_rms = float(np.sqrt(np.mean(y ** 2)))
    if out_rms > 0.0:
        y = y * (input_rms / out_rms)
    return Signal(y, rate)


def write_request_dir(request: NoiseStretchRequest, directory: Path) -> Path:
    """Materialize the protocol request files into directory."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    features = request.conditioning()
    write_wav(directory / "noise.wav", request.noise, bits=16)
    write_matrix(directory / "cond.bin", features.compressed().values)
    payload = {
        "alpha": request.alpha,
        "hop": features.hop,
        "seed": request.seed,
    }
    (directory / "req.json").write_text(json.dumps(payload, indent=2) + "\n")
    return directory


def stretch_noise_neural(request: NoiseStretchRequest) -> Signal:
    """Delegate to the external synthesizer and validate its response."""
    if not request.neural_command:
        raise NeuralBackendError(
            "neural backend unavailable: no synthesizer command configured "
            "(pass neural_command, or use the spectral backend)"
        )
    features = request.conditioning()
    spf = samples_per_frame(request.alpha, features.hop)
    expected = features.frames * spf

    with tempfile.TemporaryDirectory(prefix="stnstretch-neural-") as tmp:
        directory = write_request_dir(request, Path(tmp))
        cmd = [*request.neural_command, str(directory)]
        log.info("invoking neural backend: %s", " ".join(cmd))
        try:
            proc = subprocess.run(
                cmd, capture_output=True, text=True, timeout=request.timeout_s
            )
        except (OSError, subprocess.TimeoutExpired) as exc:
            raise NeuralBackendError(f"neural backend unavailable: {exc}") from exc
        if proc.returncode != 0:
            raise NeuralBackendError(
                f"neural backend exited with status {proc.returncode}: "
                f"{proc.stderr.strip()[:500]}"
            )

        status_path = directory / "status.json"
        if status_path.exists():
            status = json.loads(status_path.read_text())
            if status.get("status") != "ok":
                raise NeuralBackendError(f"neural backend reported failure: {status}")
        out_path = directory / "out.wav"
        if not out_path.exists():
            raise NeuralBackendError("neural backend produced no out.wav")
        out = read_wav(out_path)

    got = out.num_samples
    if abs(got - expected) > spf:
        raise NeuralBackendError(
            f"neural backend length violation: got {got} samples, "
            f"expected {expected} (tolerance one frame of {spf})"
        )
    return out


def stretch_noise(request: NoiseStretchRequest) -> Signal:
    if request.backend == "neural":
        return stretch_noise_neural(request)
    return stretch_noise_spectral(request)

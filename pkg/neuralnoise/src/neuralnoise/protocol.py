"""Serving one synthesis request from a directory.

The request layout, written by the host tool:

    noise.wav   16-bit PCM, 44.1 kHz, the component being replaced
    cond.bin    conditioning matrix (bins x frames, see io.read_matrix)
    req.json    {"alpha": float, "hop": 256, "seed": int}

The response is out.wav with frames * round(alpha * hop) samples and a
status.json of {"status": "ok"}. On any failure a status of "error" with a
message is left behind instead, and the error propagates so the process
exits nonzero.

noise.wav itself never reaches the network; synthesis is driven entirely by
the conditioning matrix. It is still validated, since a request missing or
mangling it is malformed and should be rejected loudly rather than half
served.
"""

from __future__ import annotations

import json
from pathlib import Path

from . import features
from .condition import ALPHA_MAX, ALPHA_MIN, upsample_conditioning
from .generate import BeamConfig, beam_search_generate
from .io import read_matrix, read_wav_mono, write_wav
from .model import SynthModel


class ProtocolError(ValueError):
    """Malformed or unsupported request directory."""


def _write_status(directory: Path, payload: dict) -> None:
    (directory / "status.json").write_text(json.dumps(payload) + "\n")


def _parse_request(directory: Path) -> tuple[float, int, int]:
    for name in ("req.json", "cond.bin", "noise.wav"):
        if not (directory / name).exists():
            raise ProtocolError(f"request is missing {name}")
    try:
        req = json.loads((directory / "req.json").read_text())
    except ValueError as exc:
        raise ProtocolError(f"req.json is not valid JSON: {exc}") from exc
    if "alpha" not in req:
        raise ProtocolError("req.json has no alpha")

    alpha = float(req["alpha"])
    hop = int(req.get("hop", features.HOP))
    seed = int(req.get("seed", 0))
    if not ALPHA_MIN <= alpha <= ALPHA_MAX:
        raise ProtocolError(f"alpha {alpha} outside supported range [{ALPHA_MIN}, {ALPHA_MAX}]")
    if hop != features.HOP:
        raise ProtocolError(f"unsupported conditioning hop {hop} (expected {features.HOP})")

    _, rate = read_wav_mono(directory / "noise.wav")
    if rate != features.SAMPLE_RATE:
        raise ProtocolError(f"noise.wav is {rate} Hz, expected {features.SAMPLE_RATE}")
    return alpha, hop, seed


def serve_request_dir(
    directory, model: SynthModel, beam: BeamConfig | int = BeamConfig()
) -> Path:
    """Fill one request directory; returns the path of the written out.wav."""
    directory = Path(directory)
    if not directory.is_dir():
        raise ProtocolError(f"request directory not found: {directory}")
    try:
        alpha, hop, seed = _parse_request(directory)
        cond = read_matrix(directory / "cond.bin")
        if cond.shape[0] != model.config.conditioning_bins:
            raise ProtocolError(
                f"cond.bin has {cond.shape[0]} bins, model expects "
                f"{model.config.conditioning_bins}"
            )
        rows = upsample_conditioning(cond, alpha, hop)
        audio = beam_search_generate(model, rows, beam, seed)
        out_path = directory / "out.wav"
        write_wav(out_path, audio, features.SAMPLE_RATE)
    except Exception as exc:
        _write_status(directory, {"status": "error", "message": str(exc)})
        raise
    _write_status(directory, {"status": "ok"})
    return out_path

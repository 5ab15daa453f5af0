"""Batch command-line front end.

Subcommands: `stretch` (file-in/file-out TSM with optional component dumps,
metrics, and loudness normalization), `metrics` (compare an original and a
stretched file), `features` (export CQT conditioning features).

Conventions: JSON results go to stdout, logs and warnings to stderr, audio to
files. Exit codes: 0 success, 1 usage error, 2 unreadable or invalid input
file, 3 noise-backend failure. A key=value config file given with --config
overrides the corresponding command-line flags. The STNSTRETCH_SEED
environment variable supplies the default seed.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import shlex
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .audio import AudioFormatError, Signal, read_wav, resample, write_wav
from .cqt import cqt, export_features
from .decompose import decompose_stn, default_two_stage
from .loudness import LoudnessError, integrated_loudness, normalize_loudness
from .metrics import compare
from .noise import NoiseBackendError
from .pipeline import TsmConfig, TsmRequest, tsm_detailed

log = logging.getLogger("stnstretch.cli")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_BAD_INPUT = 2
EXIT_BACKEND = 3

TARGET_RATE = 44100

# Config-file keys that may override flags, mapped to parse functions.
_CONFIG_KEYS = {
    "alpha": float,
    "backend": str,
    "seed": int,
    "target_lufs": float,
    "envelope": lambda v: v.lower() in ("1", "true", "yes", "on"),
    "bits": int,
    "neural_command": str,
}


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; this tool documents 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def build_parser() -> _Parser:
    parser = _Parser(prog="stnstretch", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_stretch = sub.add_parser("stretch", help="time-stretch a WAV file")
    p_stretch.add_argument("input", type=Path)
    p_stretch.add_argument("output", type=Path)
    p_stretch.add_argument("--alpha", type=float, required=True,
                           help="stretch factor in [1, 16]")
    p_stretch.add_argument("--backend", choices=("spectral", "neural"),
                           default="spectral")
    p_stretch.add_argument("--neural-command", default="",
                           help="command line (shell-quoted) invoking the neural synthesizer")
    p_stretch.add_argument("--seed", type=int,
                           default=int(os.environ.get("STNSTRETCH_SEED", "0")))
    p_stretch.add_argument("--no-envelope", dest="envelope", action="store_false",
                           help="disable pre-echo envelope compensation")
    p_stretch.add_argument("--target-lufs", type=float, default=None,
                           help="normalize output loudness to this LUFS value")
    p_stretch.add_argument("--dump-components", type=Path, default=None,
                           metavar="DIR", help="write sines/transients/noise WAVs")
    p_stretch.add_argument("--metrics", action="store_true",
                           help="include comparison metrics in the JSON summary")
    p_stretch.add_argument("--bits", type=int, choices=(16, 24), default=16)
    p_stretch.add_argument("--config", type=Path, default=None,
                           help="key=value file overriding the flags above")

    p_metrics = sub.add_parser("metrics", help="compare original and stretched files")
    p_metrics.add_argument("original", type=Path)
    p_metrics.add_argument("stretched", type=Path)
    p_metrics.add_argument("--alpha", type=float, default=None,
                           help="stretch factor (default: output/input length ratio)")

    p_features = sub.add_parser("features", help="export CQT conditioning features")
    p_features.add_argument("input", type=Path)
    p_features.add_argument("output", type=Path,
                            help="base path; writes <base>.bin and <base>.json")

    return parser


def _apply_config_file(args: argparse.Namespace, parser: _Parser) -> None:
    if getattr(args, "config", None) is None:
        return
    try:
        text = args.config.read_text()
    except OSError as exc:
        parser.error(f"cannot read config file: {exc}")
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            parser.error(f"{args.config}:{lineno}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip().replace("-", "_")
        if key not in _CONFIG_KEYS:
            parser.error(f"{args.config}:{lineno}: unknown key {key!r}")
        try:
            setattr(args, key, _CONFIG_KEYS[key](value.strip()))
        except ValueError as exc:
            parser.error(f"{args.config}:{lineno}: bad value for {key}: {exc}")


def _load_input(path: Path) -> Signal:
    signal = read_wav(path)
    if signal.sample_rate != TARGET_RATE:
        log.warning("resampling %s from %g Hz to %d Hz",
                    path, signal.sample_rate, TARGET_RATE)
        signal = resample(signal, TARGET_RATE)
    return signal


def _dump_components(signal: Signal, directory: Path, bits: int) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    two_stage = default_two_stage(signal.sample_rate)
    per_channel = [decompose_stn(signal.channel(i), two_stage)
                   for i in range(signal.channels)]
    for name in ("sines", "transients", "noise"):
        stack = [getattr(c, name).require_mono() for c in per_channel]
        data = stack[0] if len(stack) == 1 else np.stack(stack)
        write_wav(directory / f"{name}.wav", Signal(data, signal.sample_rate), bits=bits)


def _cmd_stretch(args: argparse.Namespace, parser: _Parser) -> int:
    if not 1.0 <= args.alpha <= 16.0:
        parser.error(f"--alpha must be in [1, 16], got {args.alpha}")

    signal = _load_input(args.input)
    config = TsmConfig(
        backend=args.backend,
        neural_command=tuple(shlex.split(args.neural_command)) if args.neural_command else (),
        seed=args.seed,
        envelope=args.envelope,
    )
    result = tsm_detailed(TsmRequest(input=signal, alpha=args.alpha, config=config))
    output = result.output

    loudness: float | None = None
    if args.target_lufs is not None:
        try:
            output, measured = normalize_loudness(output, args.target_lufs)
            log.info("normalized from %.2f to %.2f LUFS", measured, args.target_lufs)
            loudness = args.target_lufs
        except LoudnessError as exc:
            log.warning("skipping normalization: %s", exc)
    if loudness is None:
        try:
            loudness = integrated_loudness(output)
        except LoudnessError:
            loudness = None

    args.output.parent.mkdir(parents=True, exist_ok=True)
    write_wav(args.output, output, bits=args.bits)

    if args.dump_components is not None:
        _dump_components(signal, args.dump_components, args.bits)

    total = sum(result.component_energy.values()) or 1.0
    summary = {
        "schema": "stnstretch.stretch/1",
        "input": str(args.input),
        "output": str(args.output),
        "sample_rate": output.sample_rate,
        "channels": output.channels,
        "input_samples": result.input_length,
        "output_samples": result.output_length,
        "alpha_requested": args.alpha,
        "alpha_achieved": result.output_length / max(result.input_length, 1),
        "seed": args.seed,
        "backend": args.backend,
        "component_energy_fraction": {
            name: energy / total for name, energy in result.component_energy.items()
        },
        "loudness_lufs": loudness,
    }
    if args.metrics:
        summary["metrics"] = compare(signal, output, args.alpha)
    json.dump(summary, sys.stdout, indent=2)
    print()
    return EXIT_OK


def _cmd_metrics(args: argparse.Namespace) -> int:
    original = read_wav(args.original)
    stretched = read_wav(args.stretched)
    if original.sample_rate != stretched.sample_rate:
        raise AudioFormatError(
            f"sample rates differ: {original.sample_rate} vs {stretched.sample_rate}"
        )
    alpha = args.alpha
    if alpha is None:
        alpha = stretched.num_samples / max(original.num_samples, 1)
    report = {"schema": "stnstretch.metrics/1", **compare(original, stretched, alpha)}
    json.dump(report, sys.stdout, indent=2)
    print()
    return EXIT_OK


def _cmd_features(args: argparse.Namespace) -> int:
    signal = _load_input(args.input)
    if signal.channels > 1:
        log.info("mixing %d channels to mono for feature extraction", signal.channels)
        signal = Signal(signal.data.mean(axis=0), signal.sample_rate)
    features = cqt(signal)
    export_features(features, args.output)
    json.dump({
        "schema": "stnstretch.features/1",
        "input": str(args.input),
        "output": str(args.output),
        "bins": features.bins,
        "frames": features.frames,
        "hop": features.hop,
    }, sys.stdout, indent=2)
    print()
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    _apply_config_file(args, parser)
    try:
        if args.command == "stretch":
            return _cmd_stretch(args, parser)
        if args.command == "metrics":
            return _cmd_metrics(args)
        return _cmd_features(args)
    except NoiseBackendError as exc:
        log.error("%s", exc)
        return EXIT_BACKEND
    except (AudioFormatError, FileNotFoundError, PermissionError, IsADirectoryError) as exc:
        log.error("%s", exc)
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end.

Subcommands: `train` (fit a model on directories of WAV files), `generate`
(stretch one file end to end: features, upsampling, synthesis), and
`serve-dir` (answer a single protocol request directory, which is how the
host tool invokes this package as its neural noise backend).

JSON results go to stdout, progress to stderr. Exit codes: 0 success,
1 usage error, 2 anything that went wrong while running (unreadable input,
malformed request, bad checkpoint). A nonzero exit after serve-dir leaves a
status.json with the failure message in the request directory.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import __version__
from .generate import BeamConfig, generate
from .features import SAMPLE_RATE, conditioning
from .io import FileFormatError, read_wav_mono, write_wav
from .model import SynthConfig
from .protocol import ProtocolError, serve_request_dir
from .training import (
    CheckpointError, TrainingError, TrainSpec, load_model, train,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_FAILURE = 2


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; this tool documents 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def build_parser() -> _Parser:
    parser = _Parser(prog="neuralnoise", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train a model on directories of WAV files")
    p_train.add_argument("data_dirs", nargs="+", help="directories scanned recursively for .wav")
    p_train.add_argument("--out", required=True, help="checkpoint file to write")
    p_train.add_argument("--iterations", type=int, default=TrainSpec.iterations)
    p_train.add_argument("--batch-size", type=int, default=TrainSpec.batch_size)
    p_train.add_argument("--segment", type=int, default=TrainSpec.segment_length,
                         help="training segment length in samples")
    p_train.add_argument("--learning-rate", type=float, default=TrainSpec.learning_rate)
    p_train.add_argument("--eval-every", type=int, default=TrainSpec.eval_every)
    p_train.add_argument("--seed", type=int, default=TrainSpec.seed)
    p_train.add_argument("--resume", help="continue from an existing checkpoint")

    p_gen = sub.add_parser("generate", help="stretch one WAV file with a trained model")
    p_gen.add_argument("checkpoint")
    p_gen.add_argument("input")
    p_gen.add_argument("output")
    p_gen.add_argument("--alpha", type=float, required=True)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--beam", type=int, default=BeamConfig.width,
                       help="beam width; 1 means plain sampling")

    p_serve = sub.add_parser("serve-dir", help="answer one protocol request directory")
    p_serve.add_argument("--checkpoint", required=True)
    p_serve.add_argument("--beam", type=int, default=BeamConfig.width)
    p_serve.add_argument("directory")
    return parser


def _cmd_train(args) -> int:
    spec = TrainSpec(
        dataset_dirs=tuple(args.data_dirs),
        iterations=args.iterations,
        batch_size=args.batch_size,
        segment_length=args.segment,
        learning_rate=args.learning_rate,
        eval_every=args.eval_every,
        seed=args.seed,
        model=SynthConfig(),
    )
    result = train(spec, out_path=args.out, resume=args.resume,
                   log_fn=lambda msg: print(msg, file=sys.stderr))
    print(json.dumps({
        "schema": "neuralnoise.train/1",
        "checkpoint": str(result.checkpoint_path),
        "iterations": spec.iterations,
        "initial_nll": result.initial_nll,
        "final_nll": result.final_nll,
        "nll_decrease": result.nll_decrease,
        "train_crest": result.train_crest,
        "elapsed_s": result.elapsed_s,
    }, indent=2))
    return EXIT_OK


def _cmd_generate(args) -> int:
    model, _ = load_model(args.checkpoint)
    audio, rate = read_wav_mono(args.input)
    if rate != SAMPLE_RATE:
        raise FileFormatError(f"{args.input} is {rate} Hz, expected {SAMPLE_RATE}")
    cond = conditioning(audio)
    out = generate(model, cond, args.alpha, seed=args.seed,
                   beam=BeamConfig(width=args.beam) if args.beam > 1 else 1)
    write_wav(args.output, out, SAMPLE_RATE)
    print(json.dumps({
        "schema": "neuralnoise.generate/1",
        "output": args.output,
        "alpha": args.alpha,
        "seed": args.seed,
        "beam_width": args.beam,
        "input_samples": int(audio.size),
        "output_samples": int(out.size),
    }, indent=2))
    return EXIT_OK


def _cmd_serve(args) -> int:
    model, _ = load_model(args.checkpoint)
    out_path = serve_request_dir(args.directory, model,
                                 beam=BeamConfig(width=args.beam) if args.beam > 1 else 1)
    print(json.dumps({"schema": "neuralnoise.serve/1", "out": str(out_path)}))
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "train":
            return _cmd_train(args)
        if args.command == "generate":
            return _cmd_generate(args)
        return _cmd_serve(args)
    except (TrainingError, CheckpointError, ProtocolError, FileFormatError,
            ValueError, OSError) as exc:
        print(f"neuralnoise: error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())

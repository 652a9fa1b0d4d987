"""CLI: export a framework model into the engine's file pair."""

from __future__ import annotations

import argparse
import sys

import torch

from .export import DEFAULT_INPUT_SHAPE, export_model, load_zoo_model
from .tracing import TraceError


def _parse_shape(text: str) -> tuple[int, ...]:
    try:
        shape = tuple(int(piece) for piece in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad shape {text!r}; expected e.g. 1,3,224,224")
    if not shape or any(d < 1 for d in shape):
        raise argparse.ArgumentTypeError("shape dimensions must be positive")
    return shape


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tli-export",
        description="Trace a PyTorch model and emit the .tligraph.json / "
                    ".tlitensors pair for the tli engine.",
    )
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--model", help="torchvision zoo model name (e.g. resnet18)")
    source.add_argument("--file", help="path to a pickled nn.Module (torch.save)")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--name", default=None,
                        help="basename for the emitted files (default: model name)")
    parser.add_argument("--input-shape", type=_parse_shape, default=DEFAULT_INPUT_SHAPE,
                        help="dummy input shape for the trace check (default 1,3,224,224)")
    parser.add_argument("--no-pretrained", action="store_true",
                        help="skip fetching pretrained weights for zoo models")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        warnings: list[str] = []
        if args.model:
            model, warnings = load_zoo_model(args.model, pretrained=not args.no_pretrained)
            name = args.name or args.model
        else:
            loaded = torch.load(args.file, map_location="cpu", weights_only=False)
            if not isinstance(loaded, torch.nn.Module):
                print(f"error: {args.file} does not contain an nn.Module "
                      f"(got {type(loaded).__name__}); save the full module, "
                      "not a state_dict", file=sys.stderr)
                return 2
            model = loaded
            name = args.name or "model"
        result = export_model(model, args.out, name, args.input_shape)
        result.warnings = warnings + result.warnings
        for line in result.warnings:
            print(f"warning: {line}", file=sys.stderr)
        print(f"exported {name}: {result.node_count} nodes, "
              f"{result.param_count} parameter tensors -> {result.graph_path}")
        return 0
    except (TraceError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entrypoint() -> None:
    sys.exit(main())

"""Command-line surface: score, transfer, matrix, inspect.

Exit codes: 0 on success, 2 on any usage, validation, or I/O error.
All commands are deterministic — identical inputs produce identical
stdout and output files.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
from dataclasses import dataclass
from pathlib import Path

from .errors import TliError
from .graph_model import load_graph
from .injection import InjectionConfig
from .matching import match
from .segmentation import extract_paths, path_to_dict, segment, submodule_to_dict
from .tensor_store import read_store_file, write_store
from .transfer import Model, NormPolicy, TransferConfig, transfer

GRAPH_SUFFIX = ".tligraph.json"
TENSORS_SUFFIX = ".tlitensors"


@dataclass
class ModelRef:
    """Paths of one model's graph document and optional tensor store."""

    graph_path: Path
    tensors_path: Path | None

    @classmethod
    def resolve(cls, graph: str, tensors: str | None) -> "ModelRef":
        graph_path = Path(graph)
        if tensors is not None:
            return cls(graph_path, Path(tensors))
        sibling = cls.sibling_tensors(graph_path)
        return cls(graph_path, sibling if sibling.exists() else None)

    @staticmethod
    def sibling_tensors(graph_path: Path) -> Path:
        name = graph_path.name
        if name.endswith(GRAPH_SUFFIX):
            name = name[: -len(GRAPH_SUFFIX)] + TENSORS_SUFFIX
        else:
            name = graph_path.stem + TENSORS_SUFFIX
        return graph_path.with_name(name)

    def load(self, require_tensors: bool = False) -> Model:
        try:
            text = self.graph_path.read_text(encoding="utf-8")
        except UnicodeDecodeError as exc:
            raise TliError(f"{self.graph_path}: not valid UTF-8: {exc}") from exc
        try:
            graph = load_graph(text)
        except TliError as exc:
            raise type(exc)(f"{self.graph_path}: {exc}") from exc
        tensors = None
        if self.tensors_path is not None:
            try:
                tensors = read_store_file(str(self.tensors_path))
            except TliError as exc:
                raise type(exc)(f"{self.tensors_path}: {exc}") from exc
        elif require_tensors:
            raise TliError(
                f"{self.graph_path}: no tensor store given and "
                f"{self.sibling_tensors(self.graph_path)} does not exist"
            )
        model = Model(graph, tensors)
        model.validate_store()
        return model


def _atomic_write_bytes(path: Path, blob: bytes) -> None:
    """Write via a temp file + rename so failures leave no partial file."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(blob)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise


def _write_report(path: str, report) -> None:
    blob = json.dumps(report.to_dict(), indent=2, sort_keys=True).encode("utf-8")
    _atomic_write_bytes(Path(path), blob + b"\n")


def cmd_score(args: argparse.Namespace) -> int:
    student = ModelRef.resolve(args.student, args.student_tensors).load()
    teacher = ModelRef.resolve(args.teacher, args.teacher_tensors).load()
    report = match(student.paths(), teacher.paths(),
                   k=args.topk, min_score=args.min_score)
    if args.report:
        _write_report(args.report, report)
    print(f"tli_score={report.tli_score:.4f}")
    return 0


def cmd_transfer(args: argparse.Namespace) -> int:
    student = ModelRef.resolve(args.student, args.student_tensors).load(require_tensors=True)
    teacher = ModelRef.resolve(args.teacher, args.teacher_tensors).load(require_tensors=True)
    cfg = TransferConfig(
        injection=InjectionConfig(
            crop_weight=args.lambda_, temperature=args.temperature, k=args.topk,
        ),
        min_score=args.min_score,
        norm_policy=NormPolicy(args.norm_policy),
    )
    out_store, report = transfer(student, teacher, cfg)
    _atomic_write_bytes(Path(args.out), write_store(out_store))
    if args.report:
        _write_report(args.report, report)
    print(f"tli_score={report.tli_score:.4f}")
    return 0


def cmd_matrix(args: argparse.Namespace) -> int:
    models_dir = Path(args.models_dir)
    graph_files = sorted(models_dir.glob(f"*{GRAPH_SUFFIX}"))
    if not graph_files:
        raise TliError(f"{models_dir}: no {GRAPH_SUFFIX} files found")
    models: list[Model] = []
    for graph_file in graph_files:
        models.append(ModelRef.resolve(str(graph_file), None).load())
    names = [m.graph.name for m in models]
    if len(set(names)) != len(names):
        raise TliError("duplicate model names in directory; matrix would be ambiguous")
    models.sort(key=lambda m: m.graph.name)
    paths = [m.paths() for m in models]

    rows: list[list[str]] = []
    header = ["model"] + [m.graph.name for m in models]
    for i, student_model in enumerate(models):
        row = [student_model.graph.name]
        for j in range(len(models)):
            score = match(paths[i], paths[j], k=1, min_score=0.0).tli_score
            row.append(f"{score:.4f}")
        rows.append(row)

    out = Path(args.out_csv)
    buffer = io.StringIO()
    buffer.write("# directed tli_score matrix: rows are students, columns are teachers\r\n")
    writer = csv.writer(buffer)
    writer.writerow(header)
    writer.writerows(rows)
    _atomic_write_bytes(out, buffer.getvalue().encode("utf-8"))
    return 0


def cmd_inspect(args: argparse.Namespace) -> int:
    model = ModelRef.resolve(args.model, args.tensors).load()
    subs = segment(model.graph)
    shapes = None
    if model.tensors is not None:
        shapes = {name: tuple(a.shape) for name, a in model.tensors.items()}
    paths = extract_paths(model.graph, subs, shapes)
    doc = {
        "name": model.graph.name,
        "submodules": [submodule_to_dict(s) for s in subs],
        "paths": [path_to_dict(p) for p in paths],
    }
    print(json.dumps(doc, indent=2, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tli",
        description="Transfer weights between differently-shaped networks "
                    "by matching execution paths over their computation graphs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_model_args(p: argparse.ArgumentParser) -> None:
        p.add_argument("student", help=f"student graph ({GRAPH_SUFFIX})")
        p.add_argument("teacher", help=f"teacher graph ({GRAPH_SUFFIX})")
        p.add_argument("--student-tensors", default=None,
                       help="student tensor store (default: sibling file)")
        p.add_argument("--teacher-tensors", default=None,
                       help="teacher tensor store (default: sibling file)")

    p_score = sub.add_parser("score", help="print the directed similarity score")
    add_model_args(p_score)
    p_score.add_argument("--topk", type=int, default=1, help="candidates kept per parameter")
    p_score.add_argument("--min-score", type=float, default=0.0)
    p_score.add_argument("--report", default=None, help="write the full match report JSON here")
    p_score.set_defaults(func=cmd_score)

    p_transfer = sub.add_parser("transfer", help="write the student's transferred tensor store")
    add_model_args(p_transfer)
    p_transfer.add_argument("out", help=f"output tensor store path ({TENSORS_SUFFIX})")
    p_transfer.add_argument("--lambda", dest="lambda_", type=float, default=0.75,
                            help="crop/resize blend strength (default 0.75)")
    p_transfer.add_argument("--topk", type=int, default=1)
    p_transfer.add_argument("--temperature", type=float, default=1.0)
    p_transfer.add_argument("--min-score", type=float, default=0.0)
    p_transfer.add_argument("--norm-policy", default=NormPolicy.TRANSFER_ALL.value,
                            choices=[p.value for p in NormPolicy])
    p_transfer.add_argument("--report", default=None)
    p_transfer.set_defaults(func=cmd_transfer)

    p_matrix = sub.add_parser("matrix", help="pairwise similarity matrix of a model directory")
    p_matrix.add_argument("models_dir")
    p_matrix.add_argument("out_csv")
    p_matrix.set_defaults(func=cmd_matrix)

    p_inspect = sub.add_parser("inspect", help="dump submodules and execution paths as JSON")
    p_inspect.add_argument("model", help=f"graph document ({GRAPH_SUFFIX})")
    p_inspect.add_argument("--tensors", default=None)
    p_inspect.set_defaults(func=cmd_inspect)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (TliError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entrypoint() -> None:
    sys.exit(main())

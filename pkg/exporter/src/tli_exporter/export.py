"""Export orchestration: trace a model and emit the file pair."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from torch import nn

from .formats import graph_document, tensor_container
from .tracing import TraceError, trace_model

DEFAULT_INPUT_SHAPE = (1, 3, 224, 224)


@dataclass
class ExportResult:
    graph_path: Path
    tensors_path: Path
    param_count: int
    node_count: int
    warnings: list[str] = field(default_factory=list)

    def summary(self) -> dict:
        return {
            "graph": str(self.graph_path),
            "tensors": str(self.tensors_path),
            "param_count": self.param_count,
            "node_count": self.node_count,
            "warnings": list(self.warnings),
        }


def export_model(model: nn.Module, out_dir: str | Path, name: str,
                 input_shape: tuple[int, ...] = DEFAULT_INPUT_SHAPE) -> ExportResult:
    """Trace ``model`` and write ``<name>.tligraph.json`` plus
    ``<name>.tlitensors`` (and a ``<name>.export.json`` summary) into
    ``out_dir``."""
    traced = trace_model(model, input_shape)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    graph_path = out_dir / f"{name}.tligraph.json"
    tensors_path = out_dir / f"{name}.tlitensors"
    graph_path.write_text(graph_document(name, traced.nodes, traced.outputs),
                          encoding="utf-8")
    tensors_path.write_bytes(tensor_container(traced.tensors))
    result = ExportResult(
        graph_path=graph_path,
        tensors_path=tensors_path,
        param_count=len(traced.tensors),
        node_count=len(traced.nodes),
        warnings=traced.warnings,
    )
    (out_dir / f"{name}.export.json").write_text(
        json.dumps(result.summary(), indent=2, sort_keys=True) + "\n",
        encoding="utf-8")
    return result


def apply_container(model: nn.Module, tensors_path: str | Path) -> list[str]:
    """Load a transferred ``.tlitensors`` container back into ``model``.

    Container names are the module paths the exporter emitted, so they
    line up with ``state_dict`` keys.  Returns the container names that
    matched nothing (shape mismatches raise).
    """
    import torch

    from .formats import read_container

    values = read_container(Path(tensors_path).read_bytes())
    state = model.state_dict()
    unmatched = []
    for name, arr in values.items():
        if name not in state:
            unmatched.append(name)
            continue
        target = state[name]
        if tuple(target.shape) != arr.shape:
            raise ValueError(
                f"{name}: container shape {arr.shape} != model shape "
                f"{tuple(target.shape)}")
        state[name] = torch.from_numpy(arr).to(target.dtype)
    model.load_state_dict(state)
    return unmatched


def load_zoo_model(name: str, pretrained: bool = True) -> tuple[nn.Module, list[str]]:
    """Build a torchvision model by name; falls back to random
    initialization when pretrained weights cannot be fetched."""
    try:
        import torchvision.models as zoo
    except ImportError as exc:
        raise TraceError(
            "torchvision is required for --model zoo lookups; install "
            "tli-exporter[zoo] or pass --file"
        ) from exc
    warnings: list[str] = []
    if pretrained:
        try:
            return zoo.get_model(name, weights="DEFAULT"), warnings
        except Exception as exc:
            warnings.append(
                f"could not fetch pretrained weights for {name} ({exc}); "
                "using default-initialized weights")
    try:
        return zoo.get_model(name, weights=None), warnings
    except Exception as exc:
        raise TraceError(f"unknown zoo model {name!r} ({exc})") from exc

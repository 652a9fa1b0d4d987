"""tli-exporter: bridge from PyTorch models to the tli engine's formats."""

from .export import (
    DEFAULT_INPUT_SHAPE,
    ExportResult,
    apply_container,
    export_model,
    load_zoo_model,
)
from .tracing import TraceError, trace_model

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_INPUT_SHAPE", "ExportResult", "apply_container", "export_model",
    "load_zoo_model",
    "TraceError", "trace_model",
]

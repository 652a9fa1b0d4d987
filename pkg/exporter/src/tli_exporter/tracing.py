"""torch.fx tracing into the neutral interchange representation.

The mapping is deliberately lossy but never fails on unknown ops: any
module, function, or tensor method without a known translation becomes
an ``opaque`` node and a warning.  Node ids come from module paths
(``features.3.expand1x1``), so two exports of the same architecture get
identical, comparable graphs regardless of weight values.
"""

from __future__ import annotations

import operator
from dataclasses import dataclass, field

import torch
import torch.nn.functional as F
from torch import nn


class TraceError(RuntimeError):
    """Model could not be traced or its forward pass failed."""


_ACTIVATION_MODULES = {
    "ReLU", "ReLU6", "LeakyReLU", "PReLU", "ELU", "CELU", "SELU", "GELU",
    "SiLU", "Mish", "Sigmoid", "Tanh", "Softmax", "LogSoftmax", "Softmin",
    "Hardswish", "Hardsigmoid", "Hardtanh", "Softplus", "Softsign", "GLU",
    "Softshrink", "Tanhshrink",
}
_MODULE_KINDS = {
    **{name: "conv" for name in (
        "Conv1d", "Conv2d", "Conv3d",
        "ConvTranspose1d", "ConvTranspose2d", "ConvTranspose3d",
        "LazyConv1d", "LazyConv2d", "LazyConv3d")},
    **{name: "linear" for name in ("Linear", "LazyLinear", "Bilinear")},
    **{name: "batchnorm" for name in (
        "BatchNorm1d", "BatchNorm2d", "BatchNorm3d", "SyncBatchNorm",
        "LazyBatchNorm1d", "LazyBatchNorm2d", "LazyBatchNorm3d",
        "InstanceNorm1d", "InstanceNorm2d", "InstanceNorm3d")},
    **{name: "layernorm" for name in ("LayerNorm", "GroupNorm", "RMSNorm")},
    **{name: "pool" for name in (
        "MaxPool1d", "MaxPool2d", "MaxPool3d",
        "AvgPool1d", "AvgPool2d", "AvgPool3d",
        "AdaptiveAvgPool1d", "AdaptiveAvgPool2d", "AdaptiveAvgPool3d",
        "AdaptiveMaxPool1d", "AdaptiveMaxPool2d", "AdaptiveMaxPool3d",
        "LPPool1d", "LPPool2d", "FractionalMaxPool2d")},
    **{name: "reshape" for name in ("Flatten", "Unflatten")},
}

_FUNCTION_KINDS: dict = {}
for fn in (operator.add, operator.iadd, torch.add):
    _FUNCTION_KINDS[fn] = ("add", None)
for fn in (operator.mul, operator.imul, torch.mul):
    _FUNCTION_KINDS[fn] = ("mul", None)
for fn in (torch.cat, getattr(torch, "concat", None)):
    if fn is not None:
        _FUNCTION_KINDS[fn] = ("concat", None)
for fn in (torch.flatten, torch.reshape, torch.permute, torch.transpose,
           torch.squeeze, torch.unsqueeze):
    _FUNCTION_KINDS[fn] = ("reshape", None)
for fn_name in ("relu", "relu6", "leaky_relu", "elu", "celu", "selu", "gelu",
                "silu", "mish", "sigmoid", "tanh", "softmax", "log_softmax",
                "hardswish", "hardsigmoid", "hardtanh", "softplus"):
    fn = getattr(F, fn_name, None)
    if fn is not None:
        _FUNCTION_KINDS[fn] = ("activation", fn_name)
for fn_name in ("sigmoid", "tanh"):
    _FUNCTION_KINDS[getattr(torch, fn_name)] = ("activation", fn_name)
for fn_name in ("max_pool1d", "max_pool2d", "max_pool3d", "avg_pool1d",
                "avg_pool2d", "avg_pool3d", "adaptive_avg_pool1d",
                "adaptive_avg_pool2d", "adaptive_avg_pool3d",
                "adaptive_max_pool1d", "adaptive_max_pool2d",
                "adaptive_max_pool3d"):
    fn = getattr(F, fn_name, None)
    if fn is not None:
        _FUNCTION_KINDS[fn] = ("pool", None)

_METHOD_KINDS = {
    "view": ("reshape", None), "reshape": ("reshape", None),
    "flatten": ("reshape", None), "permute": ("reshape", None),
    "transpose": ("reshape", None), "contiguous": ("reshape", None),
    "squeeze": ("reshape", None), "unsqueeze": ("reshape", None),
    "add": ("add", None), "add_": ("add", None),
    "mul": ("mul", None), "mul_": ("mul", None),
    "relu": ("activation", "relu"), "relu_": ("activation", "relu"),
    "sigmoid": ("activation", "sigmoid"), "tanh": ("activation", "tanh"),
    "mean": ("pool", None),
}

# Informational attrs worth carrying over, when they are plain ints or
# int tuples.
_ATTR_NAMES = ("kernel_size", "stride", "padding", "dilation", "groups",
               "num_features", "num_groups", "in_features", "out_features")


@dataclass
class TracedGraph:
    nodes: list[dict] = field(default_factory=list)
    outputs: list[str] = field(default_factory=list)
    tensors: dict = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)


def _classify_module(module: nn.Module) -> tuple[str, str | None]:
    class_name = type(module).__name__
    if class_name in _ACTIVATION_MODULES:
        return "activation", class_name.lower()
    return _MODULE_KINDS.get(class_name, "opaque"), None


def _int_attr(value) -> object | None:
    if isinstance(value, bool):
        return None
    if isinstance(value, int):
        return value
    if isinstance(value, (tuple, list)) and all(
            isinstance(v, int) and not isinstance(v, bool) for v in value):
        return list(value)
    return None


def _module_attrs(module: nn.Module) -> dict:
    attrs = {}
    for attr_name in _ATTR_NAMES:
        value = _int_attr(getattr(module, attr_name, None))
        if value is not None:
            attrs[attr_name] = value
    return attrs


def _module_params(module: nn.Module, path: str, kind: str,
                   tensors: dict, warnings: list[str]) -> list[dict]:
    """Collect this module's own parameters and float buffers, register
    their values, and return the wire-format param entries."""
    norm_kind = kind in ("batchnorm", "layernorm")
    entries = []

    def register(local_name: str, tensor: torch.Tensor, role: str) -> None:
        full_name = f"{path}.{local_name}" if path else local_name
        if not 1 <= tensor.ndim <= 4:
            warnings.append(
                f"parameter {full_name} has rank {tensor.ndim}, outside the "
                "container's 1..4; skipped")
            return
        if full_name in tensors:
            warnings.append(f"duplicate parameter name {full_name}; skipped")
            return
        entries.append({"name": full_name, "role": role})
        tensors[full_name] = tensor.detach().cpu().to(torch.float32).numpy()

    for local_name, param in module.named_parameters(recurse=False):
        if not param.is_floating_point():
            continue
        if norm_kind:
            role = "scale" if local_name == "weight" else "shift"
        else:
            role = "bias" if local_name == "bias" else "weight"
        register(local_name, param, role)
    for local_name, buf in module.named_buffers(recurse=False):
        if buf is None or not buf.is_floating_point() or buf.ndim == 0:
            continue
        register(local_name, buf, "running_stat")
    return entries


def _flatten_node_args(fx_node) -> list:
    import torch.fx

    found = []

    def visit(value):
        if isinstance(value, torch.fx.Node):
            found.append(value)
        elif isinstance(value, (tuple, list)):
            for v in value:
                visit(v)
        elif isinstance(value, dict):
            for v in value.values():
                visit(v)

    visit(fx_node.args)
    visit(fx_node.kwargs)
    return found


def trace_model(model: nn.Module, input_shape: tuple[int, ...]) -> TracedGraph:
    """Symbolically trace ``model``, verify one forward pass on a dummy
    input of ``input_shape``, and return the interchange graph pieces."""
    model = model.eval()
    try:
        gm = torch.fx.symbolic_trace(model)
    except Exception as exc:
        raise TraceError(
            f"torch.fx could not trace this model ({exc}); models with "
            "data-dependent control flow need an fx-traceable wrapper"
        ) from exc
    try:
        with torch.no_grad():
            gm(torch.zeros(*input_shape))
    except Exception as exc:
        raise TraceError(
            f"traced forward pass failed on dummy input of shape "
            f"{tuple(input_shape)} ({exc}); pass --input-shape matching the "
            "model's expected input"
        ) from exc

    traced = TracedGraph()
    id_of: dict = {}
    used_ids: set[str] = set()
    emitted_module_params: set[str] = set()

    def claim(preferred: str) -> str:
        node_id = preferred
        serial = 1
        while node_id in used_ids:
            serial += 1
            node_id = f"{preferred}__{serial}"
        used_ids.add(node_id)
        return node_id

    for fx_node in gm.graph.nodes:
        inputs = [id_of[a] for a in _flatten_node_args(fx_node)]
        params: list[dict] = []
        attrs: dict = {}
        activation = None

        if fx_node.op == "placeholder":
            kind = "input"
            node_id = claim(str(fx_node.target))
        elif fx_node.op == "output":
            kind = "output"
            node_id = claim("output")
        elif fx_node.op == "call_module":
            path = str(fx_node.target)
            module = gm.get_submodule(path)
            kind, activation = _classify_module(module)
            if kind == "opaque":
                traced.warnings.append(
                    f"module {path} ({type(module).__name__}) mapped to opaque")
            node_id = claim(path)
            attrs = _module_attrs(module)
            if path not in emitted_module_params:
                emitted_module_params.add(path)
                params = _module_params(module, path, kind, traced.tensors,
                                        traced.warnings)
        elif fx_node.op == "call_function":
            kind, activation = _FUNCTION_KINDS.get(fx_node.target, ("opaque", None))
            if kind == "opaque":
                traced.warnings.append(
                    f"function {getattr(fx_node.target, '__name__', fx_node.target)} "
                    "mapped to opaque")
            node_id = claim(fx_node.name)
        elif fx_node.op == "call_method":
            kind, activation = _METHOD_KINDS.get(str(fx_node.target), ("opaque", None))
            if kind == "opaque":
                traced.warnings.append(f"method .{fx_node.target}() mapped to opaque")
            node_id = claim(fx_node.name)
        elif fx_node.op == "get_attr":
            kind = "opaque"
            node_id = claim(str(fx_node.target))
            value = _resolve_attr(gm, str(fx_node.target))
            if (isinstance(value, torch.Tensor) and value.is_floating_point()
                    and 1 <= value.ndim <= 4 and node_id not in traced.tensors):
                params = [{"name": node_id, "role": "weight"}]
                traced.tensors[node_id] = value.detach().cpu().to(torch.float32).numpy()
            else:
                traced.warnings.append(f"attribute {fx_node.target} mapped to opaque")
        else:
            kind = "opaque"
            traced.warnings.append(f"fx op {fx_node.op} mapped to opaque")
            node_id = claim(fx_node.name)

        id_of[fx_node] = node_id
        node_doc = {
            "id": node_id,
            "kind": kind,
            "inputs": inputs,
            "params": params,
            "attrs": attrs,
        }
        if activation is not None and kind == "activation":
            node_doc["activation"] = activation
        traced.nodes.append(node_doc)
        if fx_node.op == "output":
            traced.outputs.append(node_id)
    return traced


def _resolve_attr(root: nn.Module, dotted: str):
    value = root
    for piece in dotted.split("."):
        value = getattr(value, piece, None)
        if value is None:
            return None
    return value

"""Writers for the engine's two on-disk formats.

Implemented against the normative layouts rather than the engine's code,
so the exporter has no dependency on the engine package:

* ``.tligraph.json`` — interchange graph document (all keys lowercase).
* ``.tlitensors``    — 8-byte little-endian header length, UTF-8 JSON
  index ``{"tensors": {...}}``, then row-major little-endian float32
  data; tensors sorted by name, regions contiguous.
"""

from __future__ import annotations

import json
import struct

import numpy as np

GRAPH_KINDS = {
    "conv", "linear", "batchnorm", "layernorm", "activation", "add", "mul",
    "concat", "pool", "reshape", "input", "output", "opaque",
}
PARAM_ROLES = {"weight", "bias", "scale", "shift", "running_stat"}


def graph_document(name: str, nodes: list[dict], outputs: list[str]) -> str:
    """Serialize a graph document; nodes are dicts already in wire shape."""
    for node in nodes:
        assert node["kind"] in GRAPH_KINDS, node
        for param in node["params"]:
            assert param["role"] in PARAM_ROLES, param
    doc = {"name": name, "nodes": nodes, "outputs": outputs}
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def tensor_container(tensors: dict[str, np.ndarray]) -> bytes:
    index: dict[str, dict] = {}
    chunks: list[bytes] = []
    offset = 0
    for tensor_name in sorted(tensors):
        arr = np.asarray(tensors[tensor_name], dtype=np.float32)
        if not 1 <= arr.ndim <= 4:
            raise ValueError(f"{tensor_name}: container supports rank 1..4, got {arr.ndim}")
        if not np.isfinite(arr).all():
            raise ValueError(f"{tensor_name}: non-finite values cannot be exported")
        raw = arr.astype("<f4", copy=False).tobytes(order="C")
        index[tensor_name] = {
            "dtype": "f32",
            "shape": list(arr.shape),
            "offset": offset,
            "nbytes": len(raw),
        }
        chunks.append(raw)
        offset += len(raw)
    header = json.dumps({"tensors": index}, sort_keys=True,
                        separators=(",", ":")).encode("utf-8")
    return struct.pack("<Q", len(header)) + header + b"".join(chunks)


def read_container(blob: bytes) -> dict[str, np.ndarray]:
    """Minimal reader for the tensor container (the engine's writes are
    canonical; this accepts any well-formed layout)."""
    (header_len,) = struct.unpack_from("<Q", blob)
    index = json.loads(blob[8:8 + header_len].decode("utf-8"))["tensors"]
    data = blob[8 + header_len:]
    out: dict[str, np.ndarray] = {}
    for name, meta in index.items():
        count = meta["nbytes"] // 4
        arr = np.frombuffer(data, dtype="<f4", count=count, offset=meta["offset"])
        out[name] = arr.reshape(meta["shape"]).astype(np.float32, copy=True)
    return out

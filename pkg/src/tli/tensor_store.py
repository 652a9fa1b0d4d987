"""Bit-exact binary container for named dense f32 tensors.

Layout (normative, file extension ``.tlitensors``):

    [8-byte little-endian unsigned header length n]
    [n bytes UTF-8 JSON index:
        {"tensors": {name: {"dtype": "f32", "shape": [...],
                            "offset": int, "nbytes": int}}}]
    [data section: little-endian IEEE-754 binary32 values, row-major]

Offsets are relative to the start of the data section.  The canonical
form produced by write_store sorts tensors by name ascending and packs
their regions contiguously in that order, so writing is a pure function
of the tensor map and read/write round-trips are byte-identical.
"""

from __future__ import annotations

import json
import math
import struct

import numpy as np

from .errors import BoundsError, HeaderError, NonFiniteError

_HEADER_LEN = struct.Struct("<Q")
_MAX_RANK = 4

TensorMap = dict[str, np.ndarray]


def _check_tensor(name: str, data: np.ndarray) -> np.ndarray:
    if not isinstance(name, str) or name == "":
        raise HeaderError("tensor names must be non-empty strings")
    arr = np.asarray(data, dtype=np.float32)
    if not 1 <= arr.ndim <= _MAX_RANK:
        raise HeaderError(f"tensor {name!r}: rank must be 1..{_MAX_RANK}, got {arr.ndim}")
    if any(d < 1 for d in arr.shape):
        raise HeaderError(f"tensor {name!r}: all dimensions must be >= 1")
    if not np.isfinite(arr).all():
        raise NonFiniteError(f"tensor {name!r} contains NaN or Inf")
    return arr


def write_store(tensors: TensorMap) -> bytes:
    """Serialize a name -> array map into the canonical container bytes."""
    index: dict[str, dict] = {}
    chunks: list[bytes] = []
    offset = 0
    for name in sorted(tensors):
        arr = _check_tensor(name, tensors[name])
        raw = arr.astype("<f4", copy=False).tobytes(order="C")
        index[name] = {
            "dtype": "f32",
            "shape": list(arr.shape),
            "offset": offset,
            "nbytes": len(raw),
        }
        chunks.append(raw)
        offset += len(raw)
    header = json.dumps({"tensors": index}, sort_keys=True,
                        separators=(",", ":")).encode("utf-8")
    return _HEADER_LEN.pack(len(header)) + header + b"".join(chunks)


def _parse_meta(name: str, raw: object) -> tuple[tuple[int, ...], int, int]:
    if not isinstance(raw, dict) or set(raw) != {"dtype", "shape", "offset", "nbytes"}:
        raise HeaderError(f"tensor {name!r}: index entry must have exactly "
                          "dtype/shape/offset/nbytes")
    if raw["dtype"] != "f32":
        raise HeaderError(f"tensor {name!r}: unsupported dtype {raw['dtype']!r}")
    shape = raw["shape"]
    if (not isinstance(shape, list) or not 1 <= len(shape) <= _MAX_RANK
            or not all(isinstance(d, int) and not isinstance(d, bool) and d >= 1
                       for d in shape)):
        raise HeaderError(f"tensor {name!r}: shape must be 1..{_MAX_RANK} positive ints")
    offset, nbytes = raw["offset"], raw["nbytes"]
    if not all(isinstance(v, int) and not isinstance(v, bool) and v >= 0
               for v in (offset, nbytes)):
        raise HeaderError(f"tensor {name!r}: offset/nbytes must be non-negative ints")
    if nbytes != 4 * math.prod(shape):
        raise HeaderError(f"tensor {name!r}: nbytes {nbytes} != 4 * prod(shape)")
    return tuple(shape), offset, nbytes


def read_store(blob: bytes) -> TensorMap:
    """Parse container bytes into a name -> float32 array map.

    Raises HeaderError on a malformed header or index, BoundsError when a
    region does not fit the data section, NonFiniteError on NaN/Inf values.
    """
    if len(blob) < _HEADER_LEN.size:
        raise HeaderError("container shorter than its 8-byte length prefix")
    (header_len,) = _HEADER_LEN.unpack_from(blob)
    if _HEADER_LEN.size + header_len > len(blob):
        raise HeaderError("header length prefix exceeds container size")
    try:
        index = json.loads(blob[_HEADER_LEN.size:_HEADER_LEN.size + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise HeaderError(f"index is not valid UTF-8 JSON: {exc}") from exc
    if not isinstance(index, dict) or set(index) != {"tensors"} or not isinstance(index["tensors"], dict):
        raise HeaderError("index must be exactly {\"tensors\": {...}}")

    data = blob[_HEADER_LEN.size + header_len:]
    tensors: TensorMap = {}
    expected_offset = 0
    for name, raw_meta in index["tensors"].items():
        if not isinstance(name, str) or name == "":
            raise HeaderError("tensor names must be non-empty strings")
        shape, offset, nbytes = _parse_meta(name, raw_meta)
        # Regions must tile the data section contiguously in index order.
        if offset != expected_offset:
            raise HeaderError(f"tensor {name!r}: region at offset {offset} is not "
                              f"contiguous (expected {expected_offset})")
        expected_offset += nbytes
        if offset + nbytes > len(data):
            raise BoundsError(f"tensor {name!r}: region [{offset}, {offset + nbytes}) "
                              f"exceeds data section of {len(data)} bytes")
        arr = np.frombuffer(data, dtype="<f4", count=nbytes // 4, offset=offset)
        arr = arr.reshape(shape).astype(np.float32, copy=True)
        if not np.isfinite(arr).all():
            raise NonFiniteError(f"tensor {name!r} contains NaN or Inf")
        tensors[name] = arr
    if expected_offset != len(data):
        raise BoundsError(f"data section has {len(data) - expected_offset} trailing "
                          "bytes not covered by the index")
    return tensors


def read_store_file(path: str) -> TensorMap:
    with open(path, "rb") as fh:
        return read_store(fh.read())


def write_store_file(path: str, tensors: TensorMap) -> None:
    blob = write_store(tensors)
    with open(path, "wb") as fh:
        fh.write(blob)

"""Shape-transforming kernels: center crop, multilinear resize, their
blend, and softmax mixing of several candidates.

All kernels are pure and linear in the input tensor.  The blend keeps
three exact guarantees that the rest of the system relies on:

* same target shape  ->  output is bitwise identical to the source,
* blend factor 0     ->  output is exactly the resize,
* blend factor 1     ->  output is exactly the crop on the overlap region.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import RankMismatchError, ShapeMismatchError

Shape = tuple[int, ...]


@dataclass(frozen=True)
class InjectionConfig:
    """Knobs of the injection stage.

    crop_weight is the blend factor (the CLI's --lambda): 1 keeps only
    the cropped values, 0 only the resized ones.  k and temperature
    control how many match candidates are mixed and how sharply.
    """

    crop_weight: float = 0.75
    temperature: float = 1.0
    k: int = 1

    def __post_init__(self) -> None:
        if not 0.0 <= self.crop_weight <= 1.0:
            raise ValueError("crop_weight must be in [0, 1]")
        if not self.temperature > 0.0:
            raise ValueError("temperature must be positive")
        if self.k < 1:
            raise ValueError("k must be >= 1")


def _check_target(src: np.ndarray, target_shape: Shape) -> Shape:
    target = tuple(int(d) for d in target_shape)
    if len(target) != src.ndim:
        raise RankMismatchError(
            f"source rank {src.ndim} != target rank {len(target)}"
        )
    if any(d < 1 for d in target):
        raise ValueError("target dimensions must be >= 1")
    return target


def center_crop(src: np.ndarray, target_shape: Shape) -> tuple[np.ndarray, np.ndarray]:
    """Copy the centered window of src into a zero tensor of the target
    shape.

    Per dimension with source size n and target size m: if m <= n the
    window starts at floor((n - m) / 2); if m > n the source is placed
    centered at offset floor((m - n) / 2) and the outside stays zero.
    Returns (tensor, overlap mask) where the mask marks positions copied
    verbatim from src.
    """
    src = np.asarray(src)
    target = _check_target(src, target_shape)
    out = np.zeros(target, dtype=src.dtype)
    mask = np.zeros(target, dtype=bool)
    src_window = []
    dst_window = []
    for n, m in zip(src.shape, target):
        if m <= n:
            start = (n - m) // 2
            src_window.append(slice(start, start + m))
            dst_window.append(slice(0, m))
        else:
            offset = (m - n) // 2
            src_window.append(slice(0, n))
            dst_window.append(slice(offset, offset + n))
    out[tuple(dst_window)] = src[tuple(src_window)]
    mask[tuple(dst_window)] = True
    return out, mask


def _resize_axis(values: np.ndarray, axis: int, m: int) -> np.ndarray:
    """Linear interpolation along one axis with endpoint alignment."""
    n = values.shape[axis]
    if m == n:
        return values
    if m == 1:
        coords = np.array([(n - 1) / 2.0])
    else:
        coords = np.arange(m, dtype=np.float64) * (n - 1) / (m - 1)
    lo_idx = np.clip(np.floor(coords).astype(np.int64), 0, n - 1)
    hi_idx = np.minimum(lo_idx + 1, n - 1)
    frac = np.where(hi_idx == lo_idx, 0.0, coords - lo_idx)

    moved = np.moveaxis(values, axis, 0)
    lo = moved[lo_idx]
    hi = moved[hi_idx]
    # lo + f*(hi - lo) rather than (1-f)*lo + f*hi: preserves constants
    # exactly and keeps outputs inside [min(src), max(src)].
    out = lo + frac.reshape((m,) + (1,) * (moved.ndim - 1)) * (hi - lo)
    return np.moveaxis(out, 0, axis)


def resize(src: np.ndarray, target_shape: Shape) -> np.ndarray:
    """Multilinear resize with endpoint alignment.

    Target index j along a dimension of source size n and target size m
    samples source coordinate j*(n-1)/(m-1) (the dimension's center when
    m == 1).  A same-shape resize is the exact identity.
    """
    src = np.asarray(src)
    target = _check_target(src, target_shape)
    out = src.astype(np.float64, copy=False)
    for axis, m in enumerate(target):
        out = _resize_axis(out, axis, m)
    return out.astype(src.dtype, copy=True) if src.dtype != np.float64 else out.copy()


def combo_injection(src: np.ndarray, target_shape: Shape, crop_weight: float) -> np.ndarray:
    """Blend of crop and resize: crop_weight * crop + (1 - crop_weight) *
    resize on the crop's overlap region, pure resize outside it.

    The source tensor is never modified, and a same-shape call returns it
    unchanged (bit for bit).
    """
    if not 0.0 <= crop_weight <= 1.0:
        raise ValueError("crop_weight must be in [0, 1]")
    src = np.asarray(src)
    target = _check_target(src, target_shape)
    if target == src.shape:
        return src.copy()
    resized = resize(src, target)
    if crop_weight == 0.0:
        return resized
    cropped, overlap = center_crop(src, target)
    if crop_weight == 1.0:
        return np.where(overlap, cropped, resized)
    blended = resized.astype(np.float64) + crop_weight * (
        cropped.astype(np.float64) - resized.astype(np.float64)
    )
    return np.where(overlap, blended.astype(src.dtype), resized)


def softmax_weights(scores: list[float], temperature: float = 1.0) -> np.ndarray:
    """Softmax over scores / temperature; numerically stabilized."""
    if temperature <= 0.0:
        raise ValueError("temperature must be positive")
    z = np.asarray(scores, dtype=np.float64) / temperature
    z -= z.max()
    expz = np.exp(z)
    return expz / expz.sum()


def softmax_mix(candidates: list[tuple[np.ndarray, float]],
                temperature: float = 1.0) -> np.ndarray:
    """Combine same-shaped candidate tensors weighted by the softmax of
    their match scores.

    A single candidate passes through bitwise unchanged.
    """
    if not candidates:
        raise ValueError("softmax_mix needs at least one candidate")
    shapes = {np.asarray(tensor).shape for tensor, _ in candidates}
    if len(shapes) > 1:
        raise ShapeMismatchError(f"candidates disagree on shape: {sorted(shapes)}")
    first = np.asarray(candidates[0][0])
    if len(candidates) == 1:
        return first.copy()
    weights = softmax_weights([score for _, score in candidates], temperature)
    mixed = np.zeros(first.shape, dtype=np.float64)
    for (tensor, _), w in zip(candidates, weights):
        mixed += w * np.asarray(tensor, dtype=np.float64)
    return mixed.astype(first.dtype) if first.dtype != np.float64 else mixed

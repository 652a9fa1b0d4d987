"""Independent reference implementations used to cross-check kernels.

These deliberately avoid the production code paths: the resize oracle
evaluates every output element directly from the multilinear-corner
formula instead of separable per-axis passes.
"""

from __future__ import annotations

import itertools

import numpy as np


def resize_direct(src: np.ndarray, target_shape: tuple[int, ...]) -> np.ndarray:
    """Direct per-element multilinear interpolation with endpoint
    alignment: coordinate j*(n-1)/(m-1) per dimension ((n-1)/2 for m=1)."""
    src64 = np.asarray(src, dtype=np.float64)
    out = np.empty(target_shape, dtype=np.float64)
    for out_index in itertools.product(*(range(m) for m in target_shape)):
        coords = []
        for j, m, n in zip(out_index, target_shape, src64.shape):
            coords.append((n - 1) / 2.0 if m == 1 else j * (n - 1) / (m - 1))
        value = 0.0
        # Sum over the 2^rank corner combination of floor/ceil indices.
        corner_axes = []
        for c, n in zip(coords, src64.shape):
            lo = min(int(np.floor(c)), n - 1)
            hi = min(lo + 1, n - 1)
            f = c - lo if hi != lo else 0.0
            corner_axes.append(((lo, 1.0 - f), (hi, f)))
        for corners in itertools.product(*corner_axes):
            weight = 1.0
            idx = []
            for i, w in corners:
                weight *= w
                idx.append(i)
            if weight != 0.0:
                value += weight * src64[tuple(idx)]
        out[out_index] = value
    return out.astype(np.asarray(src).dtype)

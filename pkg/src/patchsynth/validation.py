"""Input validation helpers shared across the package.

Videos are plain numpy arrays of shape (t, h, w, c) with real dtype;
RGB content lives in [-1, 1].  These helpers centralize the checks so
every public entry point fails early with a clear message.
"""

from __future__ import annotations

import numpy as np

Shape3 = tuple[int, int, int]


def check_video(v, name: str = "video") -> np.ndarray:
    """Validate a (t, h, w, c) video array and return it as float ndarray."""
    v = np.asarray(v)
    if v.ndim != 4:
        raise ValueError(f"{name}: expected a (t, h, w, c) array, got ndim={v.ndim}")
    if any(s < 1 for s in v.shape):
        raise ValueError(f"{name}: empty dimension in shape {v.shape}")
    if not np.issubdtype(v.dtype, np.floating):
        v = v.astype(np.float32)
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name}: contains NaN or Inf values")
    return v


def check_shape3(shape, name: str = "shape") -> Shape3:
    """Validate a (t, h, w) triple of positive integers."""
    try:
        t, h, w = (int(s) for s in shape)
    except (TypeError, ValueError):
        raise ValueError(f"{name}: expected a (t, h, w) triple, got {shape!r}") from None
    if t < 1 or h < 1 or w < 1:
        raise ValueError(f"{name}: all components must be >= 1, got {(t, h, w)}")
    return (t, h, w)


def check_weights(w, grid_dims, name: str = "weights") -> np.ndarray:
    """Validate a per-key weight field: positive, finite, matching the grid."""
    w = np.ascontiguousarray(np.asarray(w, dtype=np.float64))
    if w.shape != tuple(grid_dims):
        raise ValueError(f"{name}: shape {w.shape} does not match key grid {tuple(grid_dims)}")
    if not np.all(np.isfinite(w)) or np.any(w <= 0):
        raise ValueError(f"{name}: weights must be positive and finite")
    return w


def check_mask(mask, shape3, name: str = "mask") -> np.ndarray:
    """Validate a boolean (t, h, w) occlusion mask."""
    mask = np.asarray(mask)
    if mask.shape != tuple(shape3):
        raise ValueError(f"{name}: shape {mask.shape} does not match video {tuple(shape3)}")
    return mask.astype(bool)

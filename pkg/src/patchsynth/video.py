"""Dense video tensors: tricubic resampling and temporally-replicated noise.

A video is a (t, h, w, c) float array.  Resampling is a separable cubic
convolution (Catmull-Rom, a = -0.5) applied along the temporal axis first,
then height, then width.  Sample positions use the center-aligned mapping
src = (i + 0.5) * n_in / n_out - 0.5 with edge-clamped borders, and the
result is clamped per channel to the input's value range, so constants are
reproduced exactly and no ringing escapes the input's dynamic range.
"""

from __future__ import annotations

import numpy as np

from ._rng import generator
from .validation import Shape3, check_shape3, check_video

_CUBIC_A = -0.5  # Catmull-Rom


def _cubic_kernel(t: np.ndarray) -> np.ndarray:
    """Interpolating cubic kernel with a = -0.5 (support [-2, 2])."""
    a = _CUBIC_A
    at = np.abs(t)
    at2 = at * at
    at3 = at2 * at
    inner = (a + 2.0) * at3 - (a + 3.0) * at2 + 1.0
    outer = a * (at3 - 5.0 * at2 + 8.0 * at - 4.0)
    return np.where(at <= 1.0, inner, np.where(at < 2.0, outer, 0.0))


def _axis_taps(n_in: int, n_out: int):
    """Per-output-sample source indices (n_out, 4) and weights (n_out, 4)."""
    i = np.arange(n_out, dtype=np.float64)
    src = (i + 0.5) * (n_in / n_out) - 0.5
    base = np.floor(src).astype(np.int64)
    offsets = np.arange(-1, 3, dtype=np.int64)
    idx = base[:, None] + offsets[None, :]
    w = _cubic_kernel(src[:, None] - idx)
    idx = np.clip(idx, 0, n_in - 1)  # edge-clamp borders
    return idx, w


def _resample_axis(data: np.ndarray, axis: int, n_out: int) -> np.ndarray:
    n_in = data.shape[axis]
    if n_out == n_in:
        return data
    idx, w = _axis_taps(n_in, n_out)
    moved = np.moveaxis(data, axis, 0)
    gathered = moved[idx]  # (n_out, 4, ...)
    out = np.einsum("ok,ok...->o...", w, gathered.astype(np.float64))
    return np.moveaxis(out, 0, axis)


def resize_tricubic(v: np.ndarray, target: Shape3) -> np.ndarray:
    """Resample a video to a (t, h, w) target shape with tricubic interpolation.

    The channel count is preserved.  Output values are clamped per channel to
    the input's [min, max] range; the kernel is interpolating, so resizing to
    the input's own shape returns it unchanged.
    """
    v = check_video(v, "resize input")
    tt, th, tw = check_shape3(target, "resize target")
    out = v.astype(np.float64, copy=False)
    out = _resample_axis(out, 0, tt)
    out = _resample_axis(out, 1, th)
    out = _resample_axis(out, 2, tw)
    lo = v.min(axis=(0, 1, 2))
    hi = v.max(axis=(0, 1, 2))
    out = np.clip(out, lo, hi)
    return out.astype(v.dtype, copy=False)


def make_replicated_noise(h: int, w: int, c: int, t: int, std: float, seed: int) -> np.ndarray:
    """Gaussian noise replicated along time: one (h, w, c) slab copied to t frames.

    Replication keeps the injected randomness temporally consistent.  The draw
    comes from a dedicated Philox stream, so output is bit-identical for equal
    (seed, dims, std) on every platform.
    """
    if std < 0:
        raise ValueError(f"noise std must be >= 0, got {std}")
    if min(h, w, c, t) < 1:
        raise ValueError(f"noise dimensions must be >= 1, got {(t, h, w, c)}")
    rng = generator(seed, 0x4E4F49)
    slab = rng.normal(0.0, std, size=(h, w, c)).astype(np.float32)
    return np.broadcast_to(slab, (t, h, w, c)).copy()


def psnr(a: np.ndarray, b: np.ndarray, peak: float = 2.0) -> float:
    """Peak signal-to-noise ratio in dB; peak defaults to the [-1, 1] range width."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return float("inf")
    return 10.0 * np.log10(peak * peak / mse)

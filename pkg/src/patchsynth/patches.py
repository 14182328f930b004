"""Unfolding videos into overlapping 3-D patches and folding patches back.

A patch grid is a zero-copy sliding-window view over the source video:
every valid stride-1 position (t, y, x) yields the flattened sub-block
v[t:t+p_t, y:y+p_h, x:x+p_w, :].  Folding aggregates overlapping patch
suggestions per voxel with the median; an even suggestion count takes the
mean of the two central order statistics, which keeps reconstruction
bit-exact whenever the suggestions agree.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .validation import Shape3, check_shape3, check_video


@dataclass(frozen=True)
class PatchSpec:
    """3-D patch dimensions (temporal, height, width); stride is fixed at 1."""

    p_t: int
    p_h: int
    p_w: int

    def __post_init__(self):
        if min(self.p_t, self.p_h, self.p_w) < 1:
            raise ValueError(f"patch dimensions must be >= 1, got {self}")

    def as_tuple(self) -> Shape3:
        return (self.p_t, self.p_h, self.p_w)

    def volume(self) -> int:
        return self.p_t * self.p_h * self.p_w


class PatchGrid:
    """All valid stride-1 patches of a video, as a lazy view.

    Nothing is copied until a patch vector is requested; memory stays at
    O(video size) regardless of the patch count.
    """

    def __init__(self, source: np.ndarray, spec: PatchSpec):
        source = check_video(source, "patch source")
        t, h, w, c = source.shape
        if spec.p_t > t or spec.p_h > h or spec.p_w > w:
            raise ValueError(f"patch spec {spec} does not fit video shape {source.shape}")
        self.source = source
        self.spec = spec
        self.dims = (t - spec.p_t + 1, h - spec.p_h + 1, w - spec.p_w + 1)
        win = sliding_window_view(source, spec.as_tuple(), axis=(0, 1, 2))
        # view axes: (gt, gh, gw, c, p_t, p_h, p_w) -> (gt, gh, gw, p_t, p_h, p_w, c)
        self.view = np.moveaxis(win, 3, 6)

    @property
    def channels(self) -> int:
        return self.source.shape[3]

    @property
    def n_patches(self) -> int:
        gt, gh, gw = self.dims
        return gt * gh * gw

    @property
    def patch_len(self) -> int:
        return self.spec.volume() * self.channels

    def patch(self, pos) -> np.ndarray:
        """Flattened patch vector at grid position (t, y, x)."""
        t, y, x = pos
        return self.view[t, y, x].reshape(-1).copy()

    def vectors_at(self, positions: np.ndarray) -> np.ndarray:
        """Materialize patch vectors for an (m, 3) array of grid positions."""
        positions = np.asarray(positions)
        block = self.view[positions[:, 0], positions[:, 1], positions[:, 2]]
        return block.reshape(positions.shape[0], -1)

    def all_vectors(self) -> np.ndarray:
        """Materialize every patch as an (n_patches, patch_len) matrix."""
        return np.ascontiguousarray(self.view.reshape(self.n_patches, self.patch_len))

    def positions(self) -> np.ndarray:
        """All grid positions in row-major (t, y, x) order, shape (n_patches, 3)."""
        gt, gh, gw = self.dims
        tt, yy, xx = np.meshgrid(np.arange(gt), np.arange(gh), np.arange(gw), indexing="ij")
        return np.stack([tt.ravel(), yy.ravel(), xx.ravel()], axis=1)


def unfold(v: np.ndarray, spec: PatchSpec) -> PatchGrid:
    """Patch grid over all valid stride-1 positions of the video (no padding)."""
    return PatchGrid(v, spec)


def coverage_counts(out_shape: Shape3, spec: PatchSpec) -> np.ndarray:
    """Per-voxel number of covering patches for a fully populated grid."""
    t, h, w = out_shape

    def axis_counts(n, p):
        v = np.arange(n)
        return np.minimum(v, n - p) - np.maximum(0, v - p + 1) + 1

    ct = axis_counts(t, spec.p_t)
    ch = axis_counts(h, spec.p_h)
    cw = axis_counts(w, spec.p_w)
    return ct[:, None, None] * ch[None, :, None] * cw[None, None, :]


def _median_over_slots(stack: np.ndarray) -> np.ndarray:
    """Median over axis 0 ignoring NaN slots; even counts average the middles.

    Raises on voxels with no suggestion at all.
    """
    counts = np.sum(~np.isnan(stack), axis=0)
    if np.any(counts == 0):
        raise ValueError(f"{int(np.sum(counts == 0))} output voxels received no patch suggestion")
    s = np.sort(stack, axis=0)  # NaNs sort to the end
    lo = np.take_along_axis(s, ((counts - 1) // 2)[None], axis=0)[0]
    hi = np.take_along_axis(s, (counts // 2)[None], axis=0)[0]
    half = np.asarray(0.5, dtype=stack.dtype)
    return (lo + hi) * half


def fold_median(patches, spec: PatchSpec, out_shape: Shape3, c: int) -> np.ndarray:
    """Fold (grid-position, patch-vector) pairs into a video by per-voxel median.

    Every output voxel must be covered by at least one supplied patch.  If the
    same grid position appears twice the later entry wins.
    """
    t, h, w = check_shape3(out_shape, "fold output shape")
    if spec.p_t > t or spec.p_h > h or spec.p_w > w:
        raise ValueError(f"patch spec {spec} does not fit output shape {out_shape}")
    gt, gh, gw = t - spec.p_t + 1, h - spec.p_h + 1, w - spec.p_w + 1

    items = list(patches)
    if not items:
        raise ValueError("fold_median requires at least one patch")
    pos = np.asarray([p for p, _ in items], dtype=np.int64)
    if pos.ndim != 2 or pos.shape[1] != 3:
        raise ValueError("patch positions must be (t, y, x) triples")
    if np.any(pos < 0) or np.any(pos >= np.array([gt, gh, gw])):
        raise ValueError("patch position outside the valid grid for the output shape")
    vecs = np.asarray([np.asarray(v).reshape(-1) for _, v in items])
    d = spec.volume() * c
    if vecs.shape[1] != d:
        raise ValueError(f"patch vectors have length {vecs.shape[1]}, expected {d}")

    dtype = vecs.dtype if np.issubdtype(vecs.dtype, np.floating) else np.float32
    stack = np.full((spec.volume(), t, h, w, c), np.nan, dtype=dtype)
    blocks = vecs.reshape(-1, spec.p_t, spec.p_h, spec.p_w, c)
    slot = 0
    for dt in range(spec.p_t):
        for dy in range(spec.p_h):
            for dx in range(spec.p_w):
                stack[slot, pos[:, 0] + dt, pos[:, 1] + dy, pos[:, 2] + dx] = blocks[
                    :, dt, dy, dx
                ]
                slot += 1
    return _median_over_slots(stack)

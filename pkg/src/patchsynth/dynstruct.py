"""Dynamic structure: quantized optical-flow magnitude as a motion descriptor.

The magnitude of a per-voxel flow field is quantized into k bins by 1-D
k-means; bins are relabeled by ascending center and mapped to values
i/k in (0, 1], so the field is monotone in motion strength and directly
comparable across videos when both are quantized with shared bins.
Flow can be ingested from files or estimated by a naive block matcher.
"""

from __future__ import annotations

import warnings

import numpy as np

from .validation import check_video


def flow_magnitude(flow: np.ndarray) -> np.ndarray:
    """Per-voxel magnitude sqrt(u^2 + v^2) of a (t, h, w, 2) flow field."""
    flow = np.asarray(flow, dtype=np.float64)
    if flow.ndim != 4 or flow.shape[3] != 2:
        raise ValueError(f"flow field must have shape (t, h, w, 2), got {flow.shape}")
    if not np.all(np.isfinite(flow)):
        raise ValueError("flow field contains NaN or Inf values")
    return np.sqrt(flow[..., 0] ** 2 + flow[..., 1] ** 2)


def lloyd_1d(values: np.ndarray, k: int, max_iters: int = 50, trace: list | None = None):
    """1-D k-means with deterministic quantile initialization.

    Centers start at the (i + 0.5)/k quantiles of the data and iterate to
    convergence (assignments stable) or max_iters.  Returns (centers sorted
    ascending, labels into those centers).  If `trace` is given, the
    within-cluster SSE after each update is appended.
    """
    values = np.asarray(values, dtype=np.float64).reshape(-1)
    if values.size == 0:
        raise ValueError("cannot quantize an empty field")
    centers = np.quantile(values, (np.arange(k) + 0.5) / k)
    centers = np.unique(centers)
    if centers.size < k:
        # degenerate quantiles (heavily repeated data): spread over unique values
        uniq = np.unique(values)
        take = np.linspace(0, uniq.size - 1, min(k, uniq.size)).round().astype(int)
        centers = uniq[take]
    labels = np.argmin(np.abs(values[:, None] - centers[None, :]), axis=1)
    for _ in range(max_iters):
        for j in range(centers.size):
            sel = labels == j
            if np.any(sel):
                centers[j] = values[sel].mean()
        order = np.argsort(centers, kind="stable")
        centers = centers[order]
        new_labels = np.argmin(np.abs(values[:, None] - centers[None, :]), axis=1)
        if trace is not None:
            trace.append(float(np.sum((values - centers[new_labels]) ** 2)))
        if np.array_equal(new_labels, labels):
            labels = new_labels
            break
        labels = new_labels
    return centers, labels


def kmeans_quantize(mags: np.ndarray, k: int, seed: int = 0) -> np.ndarray:
    """Quantize a scalar field into k bins; bin i maps to (i + 1)/k.

    Initialization is deterministic (data quantiles), so the seed does not
    influence the result; it is accepted for interface uniformity.  If the
    field has fewer distinct values than k, k is reduced with a warning.
    """
    mags = np.asarray(mags, dtype=np.float64)
    if k < 1:
        raise ValueError(f"bin count must be >= 1, got {k}")
    if mags.size == 0:
        raise ValueError("cannot quantize an empty field")
    distinct = np.unique(mags).size
    if k > distinct:
        warnings.warn(
            f"requested {k} bins but only {distinct} distinct values; using {distinct}",
            stacklevel=2,
        )
        k = distinct
    centers, labels = lloyd_1d(mags, k)
    k_eff = centers.size
    return ((labels.reshape(mags.shape) + 1) / k_eff).astype(np.float64)


def quantize_joint(mags_a: np.ndarray, mags_b: np.ndarray, k: int, seed: int = 0):
    """Quantize two magnitude fields with shared bins.

    Fitting on the concatenated data makes the resulting dynamic-structure
    values directly comparable between the two videos.
    """
    mags_a = np.asarray(mags_a, dtype=np.float64)
    mags_b = np.asarray(mags_b, dtype=np.float64)
    joint = np.concatenate([mags_a.reshape(-1), mags_b.reshape(-1)])
    distinct = np.unique(joint).size
    if k > distinct:
        warnings.warn(
            f"requested {k} bins but only {distinct} distinct values; using {distinct}",
            stacklevel=2,
        )
        k = distinct
    centers, _ = lloyd_1d(joint, k)
    k_eff = centers.size

    def assign(m):
        lab = np.argmin(np.abs(m.reshape(-1)[:, None] - centers[None, :]), axis=1)
        return ((lab.reshape(m.shape) + 1) / k_eff).astype(np.float64)

    return assign(mags_a), assign(mags_b)


def block_flow(v: np.ndarray, block: int = 7, radius: int = 4) -> np.ndarray:
    """Naive block-matching flow between consecutive frames.

    Frames are split into a grid of block x block tiles; each tile's
    displacement minimizes the SSD against the next frame within +-radius
    (search windows stay inside the frame), then tiles are nearest-neighbor
    upsampled to per-voxel (u, v) with u horizontal and v vertical.  The
    last frame copies the previous frame's flow so the field aligns with
    the video length.  A desk-scale stand-in for a real flow estimator.
    """
    v = check_video(v, "block_flow input")
    t, h, w, _ = v.shape
    if t < 2:
        raise ValueError("block_flow requires at least 2 frames")
    if block < 1 or block % 2 == 0:
        raise ValueError(f"block size must be odd and >= 1, got {block}")
    if radius < 1:
        raise ValueError(f"search radius must be >= 1, got {radius}")
    data = v.astype(np.float64)
    flow = np.zeros((t, h, w, 2), dtype=np.float32)
    by = range(0, h, block)
    bx = range(0, w, block)
    for f in range(t - 1):
        cur, nxt = data[f], data[f + 1]
        for y0 in by:
            y1 = min(y0 + block, h)
            for x0 in bx:
                x1 = min(x0 + block, w)
                tile = cur[y0:y1, x0:x1]
                best = np.inf
                best_d = (0, 0)
                for dy in range(-radius, radius + 1):
                    if y0 + dy < 0 or y1 + dy > h:
                        continue
                    for dx in range(-radius, radius + 1):
                        if x0 + dx < 0 or x1 + dx > w:
                            continue
                        cand = nxt[y0 + dy : y1 + dy, x0 + dx : x1 + dx]
                        ssd = float(np.sum((tile - cand) ** 2))
                        if ssd < best:
                            best = ssd
                            best_d = (dx, dy)
                flow[f, y0:y1, x0:x1, 0] = best_d[0]
                flow[f, y0:y1, x0:x1, 1] = best_d[1]
    flow[t - 1] = flow[t - 2]
    return flow


def dynamic_structure(flow: np.ndarray, k: int = 5, seed: int = 0) -> np.ndarray:
    """Quantized flow-magnitude field in (0, 1] for a single video."""
    return kmeans_quantize(flow_magnitude(flow), k, seed)

"""Compiled inner loops for patch matching and folding.

Kernels are written so that every query (or output voxel) is computed
independently from read-only snapshots, which makes the results
bit-deterministic for a fixed seed regardless of thread count.  Distance
accumulation is float64 over float32 voxels with early abort against the
incumbent, so candidate evaluation cost stays proportional to patch size.
"""

from __future__ import annotations

import os

import numba
import numpy as np
from numba import njit, prange


def apply_thread_cap():
    """Cap numba worker threads from VGPNN_THREADS (default: hardware count)."""
    raw = os.environ.get("VGPNN_THREADS", "").strip()
    limit = numba.config.NUMBA_NUM_THREADS
    if raw:
        try:
            limit = max(1, min(int(raw), limit))
        except ValueError:
            raise ValueError(f"VGPNN_THREADS: expected a positive integer, got {raw!r}") from None
    numba.set_num_threads(limit)


@njit(cache=True, inline="always")
def _patch_sse(qv, kv, qt, qy, qx, kt, ky, kx, p_t, p_h, p_w, c, abort_at):
    """Sum of squared differences between two patches, aborting when it
    can no longer beat the incumbent (abort_at)."""
    sse = 0.0
    for dt in range(p_t):
        for dy in range(p_h):
            for dx in range(p_w):
                for ch in range(c):
                    a = np.float64(qv[qt + dt, qy + dy, qx + dx, ch])
                    b = np.float64(kv[kt + dt, ky + dy, kx + dx, ch])
                    diff = a - b
                    sse += diff * diff
                if sse >= abort_at:
                    return sse
    return sse


@njit(cache=True, parallel=True)
def exhaustive_kernel(qmat, kmat, weights, valid):
    """Weighted argmin over all (query, key) pairs of materialized patch rows.

    Ties keep the smallest key index (row-major grid order).  Returns the
    best key index per query; distances are recomputed canonically outside.
    """
    nq = qmat.shape[0]
    nk = kmat.shape[0]
    d = qmat.shape[1]
    out = np.empty(nq, dtype=np.int64)
    for i in prange(nq):
        best = np.inf
        best_j = -1
        for j in range(nk):
            if not valid[j]:
                continue
            w = weights[j]
            abort_at = best * d / w
            sse = 0.0
            for e in range(d):
                diff = np.float64(qmat[i, e]) - np.float64(kmat[j, e])
                sse += diff * diff
                if sse >= abort_at:
                    break
            wd = w * (sse / d)
            if wd < best:
                best = wd
                best_j = j
        out[i] = best_j
    return out


@njit(cache=True, parallel=True)
def eval_matches_kernel(qv, kv, p_t, p_h, p_w, weights, nnf):
    """Weighted patch distance of every query against its assigned match."""
    gqt = qv.shape[0] - p_t + 1
    gqh = qv.shape[1] - p_h + 1
    gqw = qv.shape[2] - p_w + 1
    c = qv.shape[3]
    d = p_t * p_h * p_w * c
    out = np.empty((gqt, gqh, gqw), dtype=np.float64)
    n = gqt * gqh * gqw
    for qi in prange(n):
        qt = qi // (gqh * gqw)
        rem = qi % (gqh * gqw)
        qy = rem // gqw
        qx = rem % gqw
        kt = nnf[qt, qy, qx, 0]
        ky = nnf[qt, qy, qx, 1]
        kx = nnf[qt, qy, qx, 2]
        sse = _patch_sse(qv, kv, qt, qy, qx, kt, ky, kx, p_t, p_h, p_w, c, np.inf)
        out[qt, qy, qx] = weights[kt, ky, kx] * (sse / d)
    return out


@njit(cache=True, inline="always")
def _try_candidate(
    qv, kv, qt, qy, qx, ct, cy, cx, gkt, gkh, gkw, p_t, p_h, p_w, c, d, weights, valid,
    best_d, best_t, best_y, best_x,
):
    # clamp to the valid key grid, reject masked keys, accept on strict improvement
    if ct < 0:
        ct = 0
    elif ct >= gkt:
        ct = gkt - 1
    if cy < 0:
        cy = 0
    elif cy >= gkh:
        cy = gkh - 1
    if cx < 0:
        cx = 0
    elif cx >= gkw:
        cx = gkw - 1
    if not valid[ct, cy, cx]:
        return best_d, best_t, best_y, best_x
    w = weights[ct, cy, cx]
    abort_at = best_d * d / w
    sse = _patch_sse(qv, kv, qt, qy, qx, ct, cy, cx, p_t, p_h, p_w, c, abort_at)
    wd = w * (sse / d)
    if wd < best_d:
        return wd, ct, cy, cx
    return best_d, best_t, best_y, best_x


@njit(cache=True, parallel=True)
def patchmatch_iter_kernel(
    qv, kv, p_t, p_h, p_w, weights, valid,
    nnf_prev, dist_prev, nnf_next, dist_next,
    step, jitter, rand_off,
):
    """One double-buffered jump-flood iteration.

    Per query, the candidates are: for each of the six axis neighbors at
    distance `step`, the neighbor's match shifted back into alignment
    (classic propagation), the same with integer jitter, and the neighbor's
    match as-is (jump-flood seed propagation, which lets an exact position
    spread unchanged); plus one random-search candidate around the current
    match.  All reads come from the previous iteration's field, so queries
    are order-independent.
    """
    gqt = qv.shape[0] - p_t + 1
    gqh = qv.shape[1] - p_h + 1
    gqw = qv.shape[2] - p_w + 1
    gkt = kv.shape[0] - p_t + 1
    gkh = kv.shape[1] - p_h + 1
    gkw = kv.shape[2] - p_w + 1
    c = qv.shape[3]
    d = p_t * p_h * p_w * c
    n = gqt * gqh * gqw
    for qi in prange(n):
        qt = qi // (gqh * gqw)
        rem = qi % (gqh * gqw)
        qy = rem // gqw
        qx = rem % gqw
        best_d = dist_prev[qt, qy, qx]
        best_t = nnf_prev[qt, qy, qx, 0]
        best_y = nnf_prev[qt, qy, qx, 1]
        best_x = nnf_prev[qt, qy, qx, 2]
        for axis in range(3):
            for s in range(2):
                sign = -1 if s == 0 else 1
                nt, ny, nx = qt, qy, qx
                if axis == 0:
                    nt += sign * step
                elif axis == 1:
                    ny += sign * step
                else:
                    nx += sign * step
                if nt < 0 or nt >= gqt or ny < 0 or ny >= gqh or nx < 0 or nx >= gqw:
                    continue
                # shift the neighbor's match back so it aligns with this query
                ct = nnf_prev[nt, ny, nx, 0] - (nt - qt)
                cy = nnf_prev[nt, ny, nx, 1] - (ny - qy)
                cx = nnf_prev[nt, ny, nx, 2] - (nx - qx)
                best_d, best_t, best_y, best_x = _try_candidate(
                    qv, kv, qt, qy, qx, ct, cy, cx, gkt, gkh, gkw,
                    p_t, p_h, p_w, c, d, weights, valid,
                    best_d, best_t, best_y, best_x,
                )
                di = axis * 2 + s
                jt = ct + jitter[qi, di, 0]
                jy = cy + jitter[qi, di, 1]
                jx = cx + jitter[qi, di, 2]
                best_d, best_t, best_y, best_x = _try_candidate(
                    qv, kv, qt, qy, qx, jt, jy, jx, gkt, gkh, gkw,
                    p_t, p_h, p_w, c, d, weights, valid,
                    best_d, best_t, best_y, best_x,
                )
                best_d, best_t, best_y, best_x = _try_candidate(
                    qv, kv, qt, qy, qx,
                    nnf_prev[nt, ny, nx, 0], nnf_prev[nt, ny, nx, 1], nnf_prev[nt, ny, nx, 2],
                    gkt, gkh, gkw, p_t, p_h, p_w, c, d, weights, valid,
                    best_d, best_t, best_y, best_x,
                )
        rt = best_t + rand_off[qi, 0]
        ry = best_y + rand_off[qi, 1]
        rx = best_x + rand_off[qi, 2]
        best_d, best_t, best_y, best_x = _try_candidate(
            qv, kv, qt, qy, qx, rt, ry, rx, gkt, gkh, gkw,
            p_t, p_h, p_w, c, d, weights, valid,
            best_d, best_t, best_y, best_x,
        )
        dist_next[qt, qy, qx] = best_d
        nnf_next[qt, qy, qx, 0] = best_t
        nnf_next[qt, qy, qx, 1] = best_y
        nnf_next[qt, qy, qx, 2] = best_x


@njit(cache=True)
def _select_kth(buf, n, k):
    """k-th smallest of buf[:n] by in-place quickselect (middle pivot)."""
    lo = 0
    hi = n - 1
    while True:
        if lo == hi:
            return buf[lo]
        pivot = buf[(lo + hi) // 2]
        i = lo
        j = hi
        while i <= j:
            while buf[i] < pivot:
                i += 1
            while buf[j] > pivot:
                j -= 1
            if i <= j:
                tmp = buf[i]
                buf[i] = buf[j]
                buf[j] = tmp
                i += 1
                j -= 1
        if k <= j:
            hi = j
        elif k >= i:
            lo = i
        else:
            return buf[k]


@njit(cache=True, parallel=True)
def fold_matches_kernel(values, nnf, p_t, p_h, p_w, out_t, out_h, out_w):
    """Gather matched value patches and fold them with the per-voxel median.

    For each output voxel the suggestions are the value-patch voxels laid
    down by every query patch covering it (query grid = output grid of the
    fold).  Equivalent to the generic stack-based fold, but never
    materializes the full suggestion stack.
    """
    gqt = out_t - p_t + 1
    gqh = out_h - p_h + 1
    gqw = out_w - p_w + 1
    cv = values.shape[3]
    out = np.empty((out_t, out_h, out_w, cv), dtype=np.float32)
    pvol = p_t * p_h * p_w
    n = out_t * out_h * out_w
    half = np.float32(0.5)
    for vi in prange(n):
        vt = vi // (out_h * out_w)
        rem = vi % (out_h * out_w)
        vy = rem // out_w
        vx = rem % out_w
        sugg = np.empty((pvol, cv), dtype=np.float32)
        cnt = 0
        for dt in range(p_t):
            pt = vt - dt
            if pt < 0 or pt >= gqt:
                continue
            for dy in range(p_h):
                py = vy - dy
                if py < 0 or py >= gqh:
                    continue
                for dx in range(p_w):
                    px = vx - dx
                    if px < 0 or px >= gqw:
                        continue
                    mt = nnf[pt, py, px, 0] + dt
                    my = nnf[pt, py, px, 1] + dy
                    mx = nnf[pt, py, px, 2] + dx
                    for ch in range(cv):
                        sugg[cnt, ch] = values[mt, my, mx, ch]
                    cnt += 1
        scratch = np.empty(pvol, dtype=np.float32)
        for ch in range(cv):
            for s in range(cnt):
                scratch[s] = sugg[s, ch]
            lo_k = (cnt - 1) // 2
            lo = _select_kth(scratch, cnt, lo_k)
            if cnt % 2 == 0:
                # partner middle = smallest element right of the lo_k position
                hi = scratch[lo_k + 1]
                for s in range(lo_k + 2, cnt):
                    if scratch[s] < hi:
                        hi = scratch[s]
            else:
                hi = lo
            out[vt, vy, vx, ch] = (lo + hi) * half
    return out

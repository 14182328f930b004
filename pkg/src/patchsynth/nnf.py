"""Per-key-weighted nearest-neighbor fields between two patch grids.

Two solvers share one distance definition (mean squared error over the
flattened patch, weighted by the matched key's weight): an exhaustive
search used as oracle and for small problems, and a jump-flood PatchMatch
that alternates propagation from axis neighbors at decreasing steps with
a shrinking random search.  Both are deterministic; PatchMatch is
deterministic per seed and independent of thread count.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from ._rng import generator
from .patches import PatchGrid
from .validation import check_weights

_TAG_INIT = 0x504D49
_TAG_ITER = 0x504D52

DEFAULT_STEPS = (8, 4, 1)
DEFAULT_PASSES = 5


@dataclass
class NNField:
    """Best key position and achieved weighted distance per query position."""

    positions: np.ndarray  # (gt, gh, gw, 3) int32, key grid coordinates
    distances: np.ndarray  # (gt, gh, gw) float64, weighted distances
    key_dims: tuple

    @property
    def query_dims(self) -> tuple:
        return self.positions.shape[:3]

    def total(self) -> float:
        return float(np.sum(self.distances))

    def flat_positions(self) -> np.ndarray:
        return self.positions.reshape(-1, 3)


def patch_mse(a, b) -> float:
    """Mean squared componentwise difference between two patch vectors."""
    a = np.asarray(a).reshape(-1)
    b = np.asarray(b).reshape(-1)
    if a.shape[0] != b.shape[0]:
        raise ValueError(f"patch length mismatch: {a.shape[0]} vs {b.shape[0]}")
    d = a.astype(np.float64) - b.astype(np.float64)
    return float(np.mean(d * d))


def pair_distances(q: PatchGrid, k: PatchGrid, qpos: np.ndarray, kpos: np.ndarray,
                   chunk: int = 8192) -> np.ndarray:
    """patch_mse for every (query position, key position) pair, chunked."""
    qpos = np.asarray(qpos).reshape(-1, 3)
    kpos = np.asarray(kpos).reshape(-1, 3)
    out = np.empty(qpos.shape[0], dtype=np.float64)
    for i in range(0, qpos.shape[0], chunk):
        sl = slice(i, i + chunk)
        qv = q.vectors_at(qpos[sl]).astype(np.float64)
        kv = k.vectors_at(kpos[sl]).astype(np.float64)
        diff = qv - kv
        out[sl] = np.mean(diff * diff, axis=1)
    return out


def _check_compatible(q: PatchGrid, k: PatchGrid):
    if q.spec != k.spec:
        raise ValueError(f"query/key patch specs differ: {q.spec} vs {k.spec}")
    if q.channels != k.channels:
        raise ValueError(f"query/key channel counts differ: {q.channels} vs {k.channels}")


def _prepare_valid(k: PatchGrid, key_valid):
    if key_valid is None:
        return np.ones(k.dims, dtype=bool)
    key_valid = np.asarray(key_valid, dtype=bool)
    if key_valid.shape != k.dims:
        raise ValueError(f"key_valid shape {key_valid.shape} does not match key grid {k.dims}")
    if not key_valid.any():
        raise ValueError("key_valid excludes every key patch")
    return key_valid


def _finalize(q, k, w3, nnf_pos):
    """Store canonical distances (weight times patch_mse) for chosen matches."""
    flat = nnf_pos.reshape(-1, 3)
    dists = pair_distances(q, k, q.positions(), flat)
    dists *= w3[flat[:, 0], flat[:, 1], flat[:, 2]]
    return NNField(
        positions=nnf_pos.astype(np.int32, copy=False),
        distances=dists.reshape(q.dims),
        key_dims=k.dims,
    )


def uniform_weights(grid_dims) -> np.ndarray:
    """All-ones weight field over a key grid."""
    return np.ones(tuple(grid_dims), dtype=np.float64)


def exhaustive_nnf(q: PatchGrid, k: PatchGrid, w, key_valid=None) -> NNField:
    """Exact weighted nearest-neighbor field by full search.

    Ties break toward the smallest key linear index (row-major over
    t, y, x).  Intended as the oracle and for small problems: cost is
    O(#queries x #keys x patch size).
    """
    _check_compatible(q, k)
    w3 = check_weights(w, k.dims)
    valid = _prepare_valid(k, key_valid)
    _kernels.apply_thread_cap()
    best_j = _kernels.exhaustive_kernel(
        q.all_vectors(), k.all_vectors(), w3.ravel(), valid.ravel()
    )
    if np.any(best_j < 0):
        raise ValueError("no valid key available for some query")
    pos = np.stack(np.unravel_index(best_j, k.dims), axis=1).astype(np.int32)
    return _finalize(q, k, w3, pos.reshape(q.dims + (3,)))


def patchmatch_nnf(
    q: PatchGrid,
    k: PatchGrid,
    w,
    seed: int,
    steps=DEFAULT_STEPS,
    passes_per_step: int = DEFAULT_PASSES,
    key_valid=None,
    trace: list | None = None,
) -> NNField:
    """Approximate weighted nearest-neighbor field by jump-flood PatchMatch.

    The field starts uniformly random over the valid keys.  For each step in
    `steps`, repeated `passes_per_step` times, every query considers: the
    matches of its six axis neighbors at that step shifted back into place
    (each also retried with independent jitter in {-1, 0, 1}^3 and once
    unshifted, jump-flood style), and one random-search candidate drawn
    around its current match with a radius that starts at the full key
    extent and halves every iteration.  Candidates are accepted only on
    strict improvement, so the total weighted distance never increases.  If
    `trace` is given, the running total after each iteration is appended.
    """
    _check_compatible(q, k)
    if not steps:
        raise ValueError("steps schedule must be non-empty")
    if passes_per_step < 1:
        raise ValueError("passes_per_step must be >= 1")
    w3 = check_weights(w, k.dims)
    valid = _prepare_valid(k, key_valid)
    _kernels.apply_thread_cap()

    nq = q.n_patches
    spec = q.spec
    valid_lin = np.flatnonzero(valid.ravel())
    rng = generator(seed, _TAG_INIT)
    init_lin = valid_lin[rng.integers(0, valid_lin.shape[0], size=nq)]
    nnf_prev = (
        np.stack(np.unravel_index(init_lin, k.dims), axis=1)
        .astype(np.int32)
        .reshape(q.dims + (3,))
    )
    dist_prev = _kernels.eval_matches_kernel(
        q.source, k.source, spec.p_t, spec.p_h, spec.p_w, w3, nnf_prev
    )
    nnf_next = np.empty_like(nnf_prev)
    dist_next = np.empty_like(dist_prev)

    extents = np.array(k.dims, dtype=np.int64)
    it = 0
    for step in steps:
        if step < 1:
            raise ValueError(f"steps must be >= 1, got {step}")
        for _ in range(passes_per_step):
            rng_it = generator(seed, _TAG_ITER, it)
            jitter = rng_it.integers(-1, 2, size=(nq, 6, 3), dtype=np.int32)
            radii = np.maximum(1, -(-extents // (1 << min(it, 62))))
            rand_off = np.empty((nq, 3), dtype=np.int32)
            for ax in range(3):
                rand_off[:, ax] = rng_it.integers(
                    -radii[ax], radii[ax] + 1, size=nq, dtype=np.int32
                )
            _kernels.patchmatch_iter_kernel(
                q.source, k.source, spec.p_t, spec.p_h, spec.p_w, w3, valid,
                nnf_prev, dist_prev, nnf_next, dist_next,
                int(step), jitter, rand_off,
            )
            nnf_prev, nnf_next = nnf_next, nnf_prev
            dist_prev, dist_next = dist_next, dist_prev
            if trace is not None:
                trace.append(float(np.sum(dist_prev)))
            it += 1

    return _finalize(q, k, w3, nnf_prev)

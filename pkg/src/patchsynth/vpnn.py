"""The per-scale video patch nearest-neighbor step: match, gather, fold.

Queries and keys are compared as flattened space-time patches; every
query patch is then replaced by the value patch at its matched key
position and the replacements are folded back with the per-voxel median.
An optional rareness weighting (one extra reverse nearest-neighbor pass)
boosts keys that no query currently explains, which encourages the output
to cover all of the input's patches.  Repeating the step EM-style on its
own output sharpens the result at a fixed scale.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import _kernels
from ._rng import child_seed
from .nnf import (
    DEFAULT_PASSES,
    DEFAULT_STEPS,
    NNField,
    exhaustive_nnf,
    patchmatch_nnf,
    uniform_weights,
)
from .patches import PatchGrid, PatchSpec, unfold
from .validation import Shape3, check_video

SOLVERS = ("patchmatch", "exhaustive")


@dataclass(frozen=True)
class VpnnConfig:
    """Configuration of one matching step and its EM repetition."""

    spec: PatchSpec
    em_iters: int = 1
    alpha: float | None = None
    solver: str = "patchmatch"
    seed: int = 0
    pm_steps: tuple = DEFAULT_STEPS
    pm_passes: int = DEFAULT_PASSES

    def __post_init__(self):
        if self.em_iters < 1:
            raise ValueError(f"em_iters must be >= 1, got {self.em_iters}")
        if self.alpha is not None and not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if self.solver not in SOLVERS:
            raise ValueError(f"solver must be one of {SOLVERS}, got {self.solver!r}")


def _solve(q: PatchGrid, k: PatchGrid, w, cfg: VpnnConfig, seed: int, key_valid=None) -> NNField:
    if cfg.solver == "exhaustive":
        return exhaustive_nnf(q, k, w, key_valid=key_valid)
    return patchmatch_nnf(
        q, k, w, seed,
        steps=cfg.pm_steps, passes_per_step=cfg.pm_passes, key_valid=key_valid,
    )


def key_rareness(
    q: PatchGrid,
    k: PatchGrid,
    alpha: float,
    seed: int,
    solver: str = "patchmatch",
    pm_steps=DEFAULT_STEPS,
    pm_passes: int = DEFAULT_PASSES,
) -> np.ndarray:
    """Per-key weights 1 / (alpha + distance from the key to its closest query).

    A reverse nearest-neighbor pass (keys acting as queries, uniform weights)
    estimates how well each key is already represented among the queries;
    keys far from every query get large weights and therefore win matches
    more easily, pushing the synthesis toward completeness.
    """
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    cfg = VpnnConfig(spec=k.spec, solver=solver, pm_steps=pm_steps, pm_passes=pm_passes)
    reverse = _solve(k, q, uniform_weights(q.dims), cfg, seed)
    return 1.0 / (alpha + reverse.distances)


def fold_matches(values: np.ndarray, field_positions: np.ndarray, spec: PatchSpec,
                 out_shape: Shape3) -> np.ndarray:
    """Gather the value patch at each matched position and fold by median.

    Streaming equivalent of fold_median over the gathered patch set; the
    full suggestion stack is never materialized.
    """
    t, h, w = out_shape
    grid = (t - spec.p_t + 1, h - spec.p_h + 1, w - spec.p_w + 1)
    if field_positions.shape[:3] != grid:
        raise ValueError(
            f"match field grid {field_positions.shape[:3]} does not cover output {out_shape}"
        )
    _kernels.apply_thread_cap()
    return _kernels.fold_matches_kernel(
        np.ascontiguousarray(values),
        np.ascontiguousarray(field_positions),
        spec.p_t, spec.p_h, spec.p_w, t, h, w,
    )


def vpnn_step(q_video, k_video, v_video, cfg: VpnnConfig, key_valid=None) -> np.ndarray:
    """One match-gather-fold step: replace every query patch by a value patch.

    Keys and values must share a shape; queries may differ spatially and
    temporally but must carry the same channel count as the keys.  The
    output has the query's space-time shape with the value's channels.
    """
    q = check_video(q_video, "queries")
    k = check_video(k_video, "keys")
    v = check_video(v_video, "values")
    if k.shape[:3] != v.shape[:3]:
        raise ValueError(f"keys {k.shape[:3]} and values {v.shape[:3]} must share a shape")
    if q.shape[3] != k.shape[3]:
        raise ValueError(f"query channels {q.shape[3]} != key channels {k.shape[3]}")
    qg = unfold(q, cfg.spec)
    kg = unfold(k, cfg.spec)
    if cfg.alpha is not None:
        weights = key_rareness(
            qg, kg, cfg.alpha, child_seed(cfg.seed, 1),
            solver=cfg.solver, pm_steps=cfg.pm_steps, pm_passes=cfg.pm_passes,
        )
    else:
        weights = uniform_weights(kg.dims)
    field = _solve(qg, kg, weights, cfg, child_seed(cfg.seed, 2), key_valid=key_valid)
    return fold_matches(v, field.positions, cfg.spec, q.shape[:3])


def run_scale(x_n, guess, k_first, cfg: VpnnConfig, key_valid=None) -> np.ndarray:
    """EM-style repetition of vpnn_step at one scale.

    The first iteration matches the guess against k_first (typically the
    upscaled coarser input, whose blur matches the guess); later iterations
    match the current output against the sharp x_n itself.  Values always
    come from x_n.
    """
    x_n = check_video(x_n, "scale input")
    k_first = check_video(k_first, "first-iteration keys")
    if x_n.shape[:3] != k_first.shape[:3]:
        raise ValueError(
            f"k_first shape {k_first.shape[:3]} must equal scale input shape {x_n.shape[:3]}"
        )
    y = vpnn_step(guess, k_first, x_n, replace(cfg, seed=child_seed(cfg.seed, 100)),
                  key_valid=key_valid)
    for i in range(1, cfg.em_iters):
        y = vpnn_step(y, x_n, x_n, replace(cfg, seed=child_seed(cfg.seed, 100 + i)),
                      key_valid=key_valid)
    return y

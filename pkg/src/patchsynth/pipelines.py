"""Application drivers: diverse generation, retargeting, inpainting, analogies.

Every driver walks a spatio-temporal pyramid coarse to fine.  At the
coarsest scale an initial guess is synthesized directly (input plus
replicated noise for generation, the resized video for retargeting, the
cue-composited video for inpainting, the dynamic structure for
analogies); each finer scale upscales the previous output and re-matches
its patches against the corresponding un-degraded pyramid level, so the
output only ever contains patches of the source.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._rng import child_seed
from .nnf import DEFAULT_PASSES, DEFAULT_STEPS
from .patches import PatchSpec
from .pyramid import (
    ScaleFactors,
    build_pyramid,
    chain_resize,
    proportional_shapes,
    pyramid_shapes,
)
from .validation import Shape3, check_mask, check_shape3, check_video
from .video import make_replicated_noise, resize_tricubic
from .vpnn import SOLVERS, VpnnConfig, run_scale, vpnn_step

_TAG_LEVEL = 0x4C56
_TAG_NOISE = 0x4E5A


@dataclass
class PipelineConfig:
    """Tuning knobs shared by all pipelines, with production defaults.

    Patch size and EM count switch per scale on the output voxel count:
    scales above voxel_threshold use spec_small and em_iters_small to keep
    large outputs tractable, the rest use spec_large and em_iters_large.
    """

    factors: ScaleFactors = field(default_factory=lambda: ScaleFactors.of(0.82, 0.87))
    min_t: int = 3
    min_s: int = 15
    noise_std: float = 3.0
    out_shape: Shape3 | None = None
    spec_small: PatchSpec = field(default_factory=lambda: PatchSpec(3, 5, 5))
    spec_large: PatchSpec = field(default_factory=lambda: PatchSpec(3, 7, 7))
    em_iters_small: int = 1
    em_iters_large: int = 5
    voxel_threshold: int = 3_000_000
    alpha: float | None = None
    temporal_shrink: float = 0.9
    aux_max_scale_fraction: float = 0.5
    solver: str = "patchmatch"
    pm_steps: tuple = DEFAULT_STEPS
    pm_passes: int = DEFAULT_PASSES
    seed: int = 0
    noisy_coarse_keys: bool = False

    def __post_init__(self):
        if self.voxel_threshold < 1:
            raise ValueError("voxel_threshold must be positive")
        if not (0.0 < self.temporal_shrink <= 1.0):
            raise ValueError("temporal_shrink must lie in (0, 1]")
        if not (0.0 < self.aux_max_scale_fraction <= 1.0):
            raise ValueError("aux_max_scale_fraction must lie in (0, 1]")
        if self.noise_std < 0:
            raise ValueError("noise_std must be >= 0")
        if min(self.em_iters_small, self.em_iters_large) < 1:
            raise ValueError("EM iteration counts must be >= 1")
        if self.solver not in SOLVERS:
            raise ValueError(f"solver must be one of {SOLVERS}")
        for spec in (self.spec_small, self.spec_large):
            if spec.p_t > self.min_t or max(spec.p_h, spec.p_w) > self.min_s:
                raise ValueError(
                    f"patch spec {spec} does not fit the coarsest level "
                    f"(min_t={self.min_t}, min_s={self.min_s})"
                )

    @classmethod
    def for_analogies(cls, **overrides) -> "PipelineConfig":
        """Defaults for video-to-video analogies (all-pairs setting)."""
        base = dict(
            factors=ScaleFactors.of(0.9, 0.9), min_t=3, min_s=20,
            spec_small=PatchSpec(3, 5, 5), spec_large=PatchSpec(3, 5, 5),
            em_iters_small=1, em_iters_large=1, alpha=1.0,
        )
        base.update(overrides)
        return cls(**base)

    @classmethod
    def for_sketch(cls, **overrides) -> "PipelineConfig":
        """Defaults for sketch-to-video transfer (deeper pyramid, more EM)."""
        base = dict(
            factors=ScaleFactors.of(0.78, 0.78), min_t=5, min_s=35,
            spec_small=PatchSpec(3, 5, 5), spec_large=PatchSpec(3, 5, 5),
            em_iters_small=3, em_iters_large=3, alpha=1.0,
        )
        base.update(overrides)
        return cls(**base)


@dataclass
class CueMask:
    """Occlusion mask plus user color cues defined on the masked voxels."""

    mask: np.ndarray  # (t, h, w) bool
    cue: np.ndarray  # (t, h, w, c) float, consulted only where mask is True

    def validate(self, video: np.ndarray):
        self.mask = check_mask(self.mask, video.shape[:3], "occlusion mask")
        if not self.mask.any():
            raise ValueError("occlusion mask is empty")
        if self.mask.all():
            raise ValueError("occlusion mask covers the entire video")
        cue = np.asarray(self.cue, dtype=video.dtype)
        if cue.shape != video.shape:
            raise ValueError(f"cue shape {cue.shape} does not match video {video.shape}")
        vals = cue[self.mask]
        if not np.all(np.isfinite(vals)):
            raise ValueError("cue values missing (non-finite) on masked voxels")
        if vals.size and (vals.min() < -1.0 or vals.max() > 1.0):
            raise ValueError("cue values must lie in [-1, 1]")
        self.cue = cue


def _level_cfg(cfg: PipelineConfig, out_shape: Shape3, seed: int, alpha) -> VpnnConfig:
    t, h, w = out_shape
    if t * h * w > cfg.voxel_threshold:
        spec, em = cfg.spec_small, cfg.em_iters_small
    else:
        spec, em = cfg.spec_large, cfg.em_iters_large
    return VpnnConfig(
        spec=spec, em_iters=em, alpha=alpha, solver=cfg.solver, seed=seed,
        pm_steps=cfg.pm_steps, pm_passes=cfg.pm_passes,
    )


def _coarse_to_fine(pyr_levels, out_shapes, cfg, seed, alpha, coarse_guess,
                    key_valids=None):
    """Shared scale loop: run every level from coarsest to finest."""
    n_coarsest = len(pyr_levels) - 1
    y = None
    for n in range(n_coarsest, -1, -1):
        x_n = pyr_levels[n]
        vcfg = _level_cfg(cfg, out_shapes[n], child_seed(seed, _TAG_LEVEL, n), alpha)
        if n == n_coarsest:
            guess = coarse_guess
            k_first = x_n
        else:
            guess = resize_tricubic(y, out_shapes[n])
            k_first = resize_tricubic(pyr_levels[n + 1], x_n.shape[:3])
        valid = None if key_valids is None else key_valids(n, vcfg.spec)
        y = run_scale(x_n, guess, k_first, vcfg, key_valid=valid)
    return y


def generate(x: np.ndarray, cfg: PipelineConfig, seed: int) -> np.ndarray:
    """Sample a new video sharing the input's space-time patch statistics.

    Replicated Gaussian noise injected at the coarsest scale randomizes the
    layout; the output's temporal length is temporal_shrink times the
    requested length so motions land at varied temporal offsets.  Matching
    uses uniform weights.  Deterministic per seed.
    """
    x = check_video(x, "generation input")
    pyr = build_pyramid(x, cfg.factors, cfg.min_t, cfg.min_s)
    base = check_shape3(cfg.out_shape or x.shape[:3], "output shape")
    out_t = max(int(math.floor(cfg.temporal_shrink * base[0] + 0.5)), 1)
    out0 = (out_t, base[1], base[2])
    if out_t < cfg.min_t or min(base[1], base[2]) < cfg.min_s:
        raise ValueError(f"output shape {out0} is below the pyramid minima")
    out_shapes = proportional_shapes(out0, pyr.shapes(), cfg.min_t, cfg.min_s)

    ncoarse = pyr.coarsest
    x_n = pyr[ncoarse]
    tt, hh, ww = out_shapes[ncoarse]
    noise = make_replicated_noise(
        hh, ww, x.shape[3], tt, cfg.noise_std, child_seed(seed, _TAG_NOISE, 0)
    )
    coarse_guess = resize_tricubic(x_n, out_shapes[ncoarse]) + noise
    levels = list(pyr.levels)
    if cfg.noisy_coarse_keys:
        kt, kh, kw, kc = x_n.shape
        knoise = make_replicated_noise(
            kh, kw, kc, kt, cfg.noise_std, child_seed(seed, _TAG_NOISE, 1)
        )
        levels[ncoarse] = x_n + knoise
    return _coarse_to_fine(levels, out_shapes, cfg, seed, None, coarse_guess)


def retarget(x: np.ndarray, target: Shape3, cfg: PipelineConfig) -> np.ndarray:
    """Resize a video to a target shape while preserving object proportions.

    The coarsest guess is the coarsest level of a pyramid built over the
    plainly resized video (no noise); matching then repacks undistorted
    input patches into the new shape.  Rareness weighting keeps the result
    complete.  Temporal retargeting is the same operation with a target
    differing only in frame count.
    """
    x = check_video(x, "retarget input")
    target = check_shape3(target, "retarget target")
    cfg_seed = cfg.seed
    pyr = build_pyramid(x, cfg.factors, cfg.min_t, cfg.min_s)
    if target[0] < cfg.min_t or min(target[1], target[2]) < cfg.min_s:
        raise ValueError(f"target shape {target} is below the pyramid minima")
    out_shapes = proportional_shapes(target, pyr.shapes(), cfg.min_t, cfg.min_s)
    guess_chain = chain_resize(resize_tricubic(x, target), out_shapes)
    alpha = cfg.alpha if cfg.alpha is not None else 1.0
    return _coarse_to_fine(pyr.levels, out_shapes, cfg, cfg_seed, alpha, guess_chain[-1])


def _nn_downscale_mask(mask: np.ndarray, shape: Shape3) -> np.ndarray:
    idx = []
    for ax, n_out in enumerate(shape):
        n_in = mask.shape[ax]
        src = np.clip(
            np.round((np.arange(n_out) + 0.5) * n_in / n_out - 0.5).astype(np.int64),
            0, n_in - 1,
        )
        idx.append(src)
    return mask[np.ix_(idx[0], idx[1], idx[2])]


def _dilate_1(mask: np.ndarray) -> np.ndarray:
    out = mask.copy()
    for dt in (-1, 0, 1):
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                if dt == dy == dx == 0:
                    continue
                shifted = np.roll(mask, (dt, dy, dx), axis=(0, 1, 2))
                # np.roll wraps; cut the wrapped borders back off
                if dt == 1:
                    shifted[0] = False
                elif dt == -1:
                    shifted[-1] = False
                if dy == 1:
                    shifted[:, 0] = False
                elif dy == -1:
                    shifted[:, -1] = False
                if dx == 1:
                    shifted[:, :, 0] = False
                elif dx == -1:
                    shifted[:, :, -1] = False
                out |= shifted
    return out


def _patches_outside(mask: np.ndarray, spec: PatchSpec) -> np.ndarray:
    """Valid-key grid: True where the patch contains no masked voxel."""
    from numpy.lib.stride_tricks import sliding_window_view

    win = sliding_window_view(mask, spec.as_tuple())
    return ~win.any(axis=(3, 4, 5))


def inpaint(x: np.ndarray, cue: CueMask, cfg: PipelineConfig) -> np.ndarray:
    """Fill an occluded space-time region, steered by user color cues.

    The pyramid is made just deep enough that the occluded bounding box
    fits inside a single patch at the coarsest scale (pyramid minima are
    overridden down to the patch size if necessary).  At every level the
    masked voxels of the input are replaced by the downscaled cue colors,
    while keys and values are restricted to patches fully outside the
    (dilated) mask, so filled content is always real input material.
    Unmasked voxels of the result are restored from the input verbatim.
    """
    x = check_video(x, "inpaint input")
    cue.validate(x)
    spec0 = cfg.spec_large
    floor_t = spec0.p_t
    floor_s = max(spec0.p_h, spec0.p_w)

    tt, yy, xx = np.nonzero(cue.mask)
    bbox = (
        int(tt.max() - tt.min() + 1),
        int(yy.max() - yy.min() + 1),
        int(xx.max() - xx.min() + 1),
    )
    t0, h0, w0 = x.shape[:3]

    def find_depth(chain):
        for n, (t, h, w) in enumerate(chain):
            bb = (
                math.ceil(bbox[0] * t / t0),
                math.ceil(bbox[1] * h / h0),
                math.ceil(bbox[2] * w / w0),
            )
            if bb[0] <= spec0.p_t and bb[1] <= spec0.p_h and bb[2] <= spec0.p_w:
                return n
        return None

    # normal pyramid first; if the box never shrinks to patch size there,
    # override the minima and keep downscaling until it does
    shapes = pyramid_shapes(
        x.shape[:3], cfg.factors, max(cfg.min_t, floor_t), max(cfg.min_s, floor_s)
    )
    depth = find_depth(shapes)
    if depth is None:
        shapes = pyramid_shapes(x.shape[:3], cfg.factors, floor_t, floor_s)
        depth = find_depth(shapes)
    if depth is None:
        raise ValueError("occluded region too large: it never fits inside one patch")
    shapes = shapes[: depth + 1]

    composite = x.copy()
    composite[cue.mask] = cue.cue[cue.mask]
    comp_chain = chain_resize(composite, shapes)
    # Downscale the cue separately, padded outside the mask with the mean cue
    # color, and re-impose it on every level: chained downscaling of the
    # composite alone would blend the cue into its surroundings and the
    # steering signal would be gone by the coarsest scale.
    cue_pad = np.empty_like(x)
    cue_pad[:] = cue.cue[cue.mask].mean(axis=0)
    cue_pad[cue.mask] = cue.cue[cue.mask]
    cue_chain = chain_resize(cue_pad, shapes)
    masks = [cue.mask]
    for shp in shapes[1:]:
        masks.append(_dilate_1(_nn_downscale_mask(cue.mask, shp)))
    for n in range(1, len(shapes)):
        level = comp_chain[n].copy()
        level_mask = _nn_downscale_mask(cue.mask, shapes[n])
        level[level_mask] = cue_chain[n][level_mask]
        comp_chain[n] = level

    def key_valids(n, spec):
        valid = _patches_outside(masks[n], spec)
        if not valid.any():
            raise ValueError(f"no un-occluded key patches at pyramid level {n}")
        return valid

    alpha = cfg.alpha if cfg.alpha is not None else 1.0
    y = _coarse_to_fine(
        comp_chain, shapes, cfg, cfg.seed, alpha, comp_chain[-1], key_valids=key_valids
    )
    out = y.astype(x.dtype, copy=False)
    out[~cue.mask] = x[~cue.mask]
    return out


def _as_dyn(dyn, video, name) -> np.ndarray:
    dyn = np.asarray(dyn, dtype=np.float32)
    if dyn.ndim == 3:
        dyn = dyn[..., None]
    if dyn.ndim != 4 or dyn.shape[3] != 1:
        raise ValueError(f"{name}: expected a single-channel (t, h, w) field")
    if dyn.shape[:3] != video.shape[:3]:
        raise ValueError(
            f"{name}: shape {dyn.shape[:3]} does not match its video {video.shape[:3]}"
        )
    if dyn.min() < 0.0 or dyn.max() > 1.0:
        raise ValueError(f"{name}: values must lie in [0, 1]")
    return dyn


def analogies(
    c_video: np.ndarray,
    s_video: np.ndarray,
    dyn_c: np.ndarray,
    dyn_s: np.ndarray,
    cfg: PipelineConfig,
) -> np.ndarray:
    """Re-render the content video's motion layout with the style video's patches.

    At the coarsest scale patches are matched purely on dynamic structure;
    finer scales concatenate the dynamic channel to the RGB queries and keys
    until aux_max_scale_fraction of the pyramid is reached, after which the
    remaining (finest) scales match on RGB alone.  Values are always style
    patches, so appearance comes entirely from the style video.
    """
    c_video = check_video(c_video, "content video")
    s_video = check_video(s_video, "style video")
    dyn_c = _as_dyn(dyn_c, c_video, "content dynamic structure")
    dyn_s = _as_dyn(dyn_s, s_video, "style dynamic structure")

    shapes_c = pyramid_shapes(c_video.shape[:3], cfg.factors, cfg.min_t, cfg.min_s)
    shapes_s = pyramid_shapes(s_video.shape[:3], cfg.factors, cfg.min_t, cfg.min_s)
    depth = min(len(shapes_c), len(shapes_s))
    shapes_c, shapes_s = shapes_c[:depth], shapes_s[:depth]
    s_chain = chain_resize(s_video, shapes_s)
    dyn_s_chain = chain_resize(dyn_s, shapes_s)
    dyn_c_chain = chain_resize(dyn_c, shapes_c)

    alpha = cfg.alpha if cfg.alpha is not None else 1.0
    n_coarsest = depth - 1
    aux_cutoff = math.ceil((1.0 - cfg.aux_max_scale_fraction) * n_coarsest)
    y = None
    for n in range(n_coarsest, -1, -1):
        vcfg = _level_cfg(cfg, shapes_c[n], child_seed(cfg.seed, _TAG_LEVEL, n), alpha)
        if n == n_coarsest:
            # dynamic structure only; a single step (output channels change)
            y = vpnn_step(dyn_c_chain[n], dyn_s_chain[n], s_chain[n], vcfg)
            continue
        use_aux = n >= aux_cutoff
        guess_rgb = resize_tricubic(y, shapes_c[n])
        for i in range(vcfg.em_iters):
            if use_aux:
                q = np.concatenate([dyn_c_chain[n], guess_rgb], axis=3)
                k = np.concatenate([dyn_s_chain[n], s_chain[n]], axis=3)
            else:
                q = guess_rgb
                k = s_chain[n]
            step_cfg = VpnnConfig(
                spec=vcfg.spec, em_iters=1, alpha=alpha, solver=cfg.solver,
                seed=child_seed(vcfg.seed, 100 + i),
                pm_steps=cfg.pm_steps, pm_passes=cfg.pm_passes,
            )
            guess_rgb = vpnn_step(q, k, s_chain[n], step_cfg)
        y = guess_rgb
    return y

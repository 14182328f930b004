"""Scikit-learn style estimators wrapping the synthesis pipelines.

The synthesis model is non-parametric: fit() stores and validates the
exemplar video (the "training data" is the video's own patch
distribution), and sampling/transforming runs the corresponding
pipeline.  Parameters follow sklearn conventions (all in __init__,
introspectable via get_params), so the estimators clone and compose like
any other estimator.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .patches import PatchSpec
from .pipelines import CueMask, PipelineConfig, analogies, generate, inpaint, retarget
from .pyramid import ScaleFactors
from .validation import check_video

_TUNING = (
    "spatial_factor", "temporal_factor", "min_t", "min_s", "patch_large",
    "patch_small", "em_large", "em_small", "voxel_threshold", "alpha",
    "solver", "pm_steps", "pm_passes", "seed",
)


class _PatchSynthBase(BaseEstimator):
    """Shared config plumbing; subclasses declare the full sklearn signature."""

    def _config(self, **extra) -> PipelineConfig:
        return PipelineConfig(
            factors=ScaleFactors.of(self.spatial_factor, self.temporal_factor),
            min_t=self.min_t, min_s=self.min_s,
            spec_large=PatchSpec(*self.patch_large),
            spec_small=PatchSpec(*self.patch_small),
            em_iters_large=self.em_large, em_iters_small=self.em_small,
            voxel_threshold=self.voxel_threshold, alpha=self.alpha,
            solver=self.solver, pm_steps=tuple(self.pm_steps),
            pm_passes=self.pm_passes, seed=self.seed, **extra,
        )

    def _set_tuning(self, values: dict):
        for name in _TUNING:
            setattr(self, name, values[name])

    def _require_fitted(self):
        if getattr(self, "video_", None) is None:
            raise NotFittedError(f"{type(self).__name__} must be fitted before use")


class VideoGenerator(_PatchSynthBase):
    """Non-parametric generative model over one video's space-time patches.

    fit(X) ingests the exemplar video; sample() draws new videos with the
    same patch statistics.  Like KernelDensity, nothing is learned beyond
    the data itself.
    """

    def __init__(self, noise_std=3.0, temporal_shrink=0.9, out_shape=None,
                 spatial_factor=0.82, temporal_factor=0.87, min_t=3, min_s=15,
                 patch_large=(3, 7, 7), patch_small=(3, 5, 5), em_large=5, em_small=1,
                 voxel_threshold=3_000_000, alpha=None, solver="patchmatch",
                 pm_steps=(8, 4, 1), pm_passes=5, seed=0):
        self.noise_std = noise_std
        self.temporal_shrink = temporal_shrink
        self.out_shape = out_shape
        self._set_tuning(locals())

    def fit(self, X, y=None):
        self.video_ = check_video(X, "exemplar video")
        return self

    def sample(self, n_samples=1, seed=None):
        """Generate n_samples videos; sample i uses seed + i."""
        self._require_fitted()
        base_seed = self.seed if seed is None else seed
        cfg = self._config(
            noise_std=self.noise_std,
            temporal_shrink=self.temporal_shrink,
            out_shape=self.out_shape,
        )
        return [generate(self.video_, cfg, base_seed + i) for i in range(n_samples)]


class Retargeter(_PatchSynthBase):
    """Content-preserving resize to a fixed target shape (t, h, w)."""

    def __init__(self, target_shape=None,
                 spatial_factor=0.82, temporal_factor=0.87, min_t=3, min_s=15,
                 patch_large=(3, 7, 7), patch_small=(3, 5, 5), em_large=5, em_small=1,
                 voxel_threshold=3_000_000, alpha=1.0, solver="patchmatch",
                 pm_steps=(8, 4, 1), pm_passes=5, seed=0):
        self.target_shape = target_shape
        self._set_tuning(locals())

    def fit(self, X, y=None):
        if self.target_shape is None:
            raise ValueError("Retargeter requires target_shape")
        self.video_ = check_video(X, "retarget video")
        return self

    def transform(self, X=None):
        self._require_fitted()
        src = self.video_ if X is None else check_video(X, "retarget video")
        return retarget(src, tuple(self.target_shape), self._config())

    def fit_transform(self, X, y=None):
        return self.fit(X).transform()


class Inpainter(_PatchSynthBase):
    """Conditional completion of an occluded region following color cues."""

    def __init__(self, mask=None, cue=None,
                 spatial_factor=0.82, temporal_factor=0.87, min_t=3, min_s=15,
                 patch_large=(3, 7, 7), patch_small=(3, 5, 5), em_large=5, em_small=1,
                 voxel_threshold=3_000_000, alpha=1.0, solver="patchmatch",
                 pm_steps=(8, 4, 1), pm_passes=5, seed=0):
        self.mask = mask
        self.cue = cue
        self._set_tuning(locals())

    def fit(self, X, y=None):
        if self.mask is None or self.cue is None:
            raise ValueError("Inpainter requires mask and cue")
        self.video_ = check_video(X, "inpaint video")
        return self

    def transform(self, X=None):
        self._require_fitted()
        src = self.video_ if X is None else check_video(X, "inpaint video")
        return inpaint(src, CueMask(np.asarray(self.mask), np.asarray(self.cue)),
                       self._config())

    def fit_transform(self, X, y=None):
        return self.fit(X).transform()


class VideoAnalogy(_PatchSynthBase):
    """Style transfer driven by dynamic structure.

    fit(S, dyn=dyn_s) ingests the style video and its dynamic-structure
    field; transform(C, dyn=dyn_c) renders the content layout with style
    patches.
    """

    def __init__(self, aux_max_scale_fraction=0.5,
                 spatial_factor=0.9, temporal_factor=0.9, min_t=3, min_s=20,
                 patch_large=(3, 5, 5), patch_small=(3, 5, 5), em_large=1, em_small=1,
                 voxel_threshold=3_000_000, alpha=1.0, solver="patchmatch",
                 pm_steps=(8, 4, 1), pm_passes=5, seed=0):
        self.aux_max_scale_fraction = aux_max_scale_fraction
        self._set_tuning(locals())

    def fit(self, X, y=None, dyn=None):
        if dyn is None:
            raise ValueError("VideoAnalogy.fit requires the style dynamic structure (dyn=)")
        self.video_ = check_video(X, "style video")
        self.dyn_ = dyn
        return self

    def transform(self, X, dyn=None):
        self._require_fitted()
        if dyn is None:
            raise ValueError("VideoAnalogy.transform requires the content dynamic structure")
        cfg = self._config(aux_max_scale_fraction=self.aux_max_scale_fraction)
        return analogies(check_video(X, "content video"), self.video_, dyn, self.dyn_, cfg)

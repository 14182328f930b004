"""Spatio-temporal pyramids.

A pyramid is the list of progressively downscaled versions of a video,
finest first.  Each step multiplies every dimension by its scale factor
and rounds half away from zero; once a dimension group (temporal, or
spatial as measured by min(h, w)) would drop below its minimum it is
clamped there and frozen, while the other group keeps shrinking until it
reaches its own minimum.  The coarsest level therefore sits exactly at
the minima.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .validation import Shape3, check_shape3, check_video
from .video import resize_tricubic


@dataclass(frozen=True)
class ScaleFactors:
    """Per-dimension downscale factors in (0, 1); height and width share one."""

    r_h: float
    r_w: float
    r_t: float

    def __post_init__(self):
        for name, r in (("r_h", self.r_h), ("r_w", self.r_w), ("r_t", self.r_t)):
            if not (0.0 < r < 1.0):
                raise ValueError(f"{name} must lie in (0, 1), got {r}")
        if self.r_h != self.r_w:
            raise ValueError(f"spatial factors must match, got r_h={self.r_h}, r_w={self.r_w}")

    @classmethod
    def of(cls, spatial: float, temporal: float) -> "ScaleFactors":
        return cls(spatial, spatial, temporal)


def _round_half_away(x: float) -> int:
    return int(math.floor(x + 0.5))


def pyramid_shapes(shape: Shape3, factors: ScaleFactors, min_t: int, min_s: int) -> list[Shape3]:
    """Level shapes (finest first) produced by the downscale-until-minimum rule."""
    t, h, w = check_shape3(shape, "pyramid input shape")
    if t < min_t or h < min_s or w < min_s:
        raise ValueError(
            f"input shape {(t, h, w)} is below the pyramid minima (min_t={min_t}, min_s={min_s})"
        )
    shapes = [(t, h, w)]
    while not (t == min_t and min(h, w) == min_s):
        if t > min_t:
            nt = max(_round_half_away(t * factors.r_t), min_t)
            if nt == t:  # rounding stalled above the minimum; force progress
                nt = t - 1
        else:
            nt = t
        if min(h, w) > min_s:
            nh = _round_half_away(h * factors.r_h)
            nw = _round_half_away(w * factors.r_w)
            if nh == h and nw == w:
                nh, nw = h - 1, w - 1
            nh = max(nh, min_s)
            nw = max(nw, min_s)
        else:
            nh, nw = h, w
        t, h, w = nt, nh, nw
        shapes.append((t, h, w))
    return shapes


@dataclass
class Pyramid:
    """Ordered video levels, index 0 = finest (the input), last = coarsest."""

    levels: list = field(default_factory=list)
    factors: ScaleFactors = None
    min_t: int = 1
    min_s: int = 1

    def __len__(self) -> int:
        return len(self.levels)

    def __getitem__(self, n: int) -> np.ndarray:
        return self.levels[n]

    @property
    def coarsest(self) -> int:
        return len(self.levels) - 1

    def shapes(self) -> list[Shape3]:
        return [lvl.shape[:3] for lvl in self.levels]


def build_pyramid(v: np.ndarray, factors: ScaleFactors, min_t: int, min_s: int) -> Pyramid:
    """Build the full pyramid of a video; each level resamples the previous one."""
    v = check_video(v, "pyramid input")
    shapes = pyramid_shapes(v.shape[:3], factors, min_t, min_s)
    levels = [v]
    for shp in shapes[1:]:
        levels.append(resize_tricubic(levels[-1], shp))
    return Pyramid(levels=levels, factors=factors, min_t=min_t, min_s=min_s)


def chain_resize(v: np.ndarray, shapes: list[Shape3]) -> list[np.ndarray]:
    """Resample a video through an explicit shape chain (finest first).

    Used when a second pyramid must pair level-for-level with an existing
    one: each entry is produced from the previous, like build_pyramid, but
    the shapes are prescribed instead of derived from the stopping rule.
    """
    v = check_video(v, "chain input")
    if tuple(v.shape[:3]) != tuple(shapes[0]):
        v = resize_tricubic(v, shapes[0])
    levels = [v]
    for shp in shapes[1:]:
        levels.append(resize_tricubic(levels[-1], shp))
    return levels


def proportional_shapes(
    out_shape: Shape3, ref_shapes: list[Shape3], min_t: int = 1, min_s: int = 1
) -> list[Shape3]:
    """Level shapes for an output that tracks a reference pyramid's scales.

    Level n of the output is the output shape scaled by the same per-axis
    ratio as ref level n over ref level 0, rounded half away from zero and
    floored at the minima.  This pairs the two pyramids level-for-level at
    matching degrees of downscaling even when the end shapes differ.
    """
    ot, oh, ow = check_shape3(out_shape, "output shape")
    rt0, rh0, rw0 = ref_shapes[0]
    out = []
    for (rt, rh, rw) in ref_shapes:
        t = max(_round_half_away(ot * rt / rt0), min_t)
        h = max(_round_half_away(oh * rh / rh0), min_s)
        w = max(_round_half_away(ow * rw / rw0), min_s)
        out.append((t, h, w))
    return out

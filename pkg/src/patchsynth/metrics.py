"""Quantitative evaluation: sample diversity and patch coherence.

The diversity index measures how different a set of generated samples is:
per-voxel standard deviation across samples on grayscale values, averaged
over voxels, normalized by the input's grayscale voxel deviation.  The
coherence audit measures whether an output is made purely of input
patches: the worst (maximum) over output patches of the distance to the
closest input patch.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .nnf import exhaustive_nnf, uniform_weights
from .patches import PatchSpec, unfold
from .validation import check_video

# fixed luma weights for RGB -> grayscale
_LUMA = np.array([0.299, 0.587, 0.114], dtype=np.float64)


@dataclass
class SampleSet:
    """An input video plus generated samples of one common shape."""

    input: np.ndarray
    samples: list

    def __post_init__(self):
        self.input = check_video(self.input, "input")
        self.samples = [check_video(s, f"sample {i}") for i, s in enumerate(self.samples)]
        if len(self.samples) < 2:
            raise ValueError("diversity needs at least 2 samples")
        shapes = {s.shape for s in self.samples}
        if len(shapes) != 1:
            raise ValueError(f"samples must share one shape, got {sorted(shapes)}")


def _grayscale(v: np.ndarray) -> np.ndarray:
    if v.shape[3] == 3:
        return v.astype(np.float64) @ _LUMA
    if v.shape[3] == 1:
        return v[..., 0].astype(np.float64)
    raise ValueError(f"grayscale conversion expects 1 or 3 channels, got {v.shape[3]}")


def diversity_index(s: SampleSet) -> float:
    """Mean per-voxel sample deviation over the input's voxel deviation.

    Standard deviations are population ones (divide by n).  Zero means all
    samples are identical; larger is more diverse.  The index is invariant
    to sample order.
    """
    grays = np.stack([_grayscale(v) for v in s.samples])
    # center on the first sample: the std is translation invariant, and
    # identical samples then give exactly zero instead of rounding residue
    grays -= grays[0].copy()
    per_voxel_std = grays.std(axis=0)  # population std across samples
    input_std = float(_grayscale(s.input).std())
    if input_std == 0.0:
        raise ValueError("diversity index undefined for a constant input video")
    return float(per_voxel_std.mean() / input_std)


def coherence_audit(y: np.ndarray, x: np.ndarray, spec: PatchSpec) -> float:
    """Worst-case distance from any patch of y to its closest patch of x.

    Exhaustive; intended for small instances.  Zero means every patch of y
    appears in x (perfect coherence).
    """
    y = check_video(y, "audited output")
    x = check_video(x, "reference input")
    if y.shape[3] != x.shape[3]:
        raise ValueError(f"channel mismatch: {y.shape[3]} vs {x.shape[3]}")
    yg = unfold(y, spec)
    xg = unfold(x, spec)
    field = exhaustive_nnf(yg, xg, uniform_weights(xg.dims))
    return float(field.distances.max())

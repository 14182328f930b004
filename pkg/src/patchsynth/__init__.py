"""Learning-free video synthesis by space-time patch nearest neighbors.

Generates diverse new videos from a single input, and performs spatial or
temporal retargeting, cue-conditioned inpainting, and video analogies,
all with one coarse-to-fine match-gather-fold machinery over a
spatio-temporal pyramid.
"""

from .dynstruct import (
    block_flow,
    dynamic_structure,
    flow_magnitude,
    kmeans_quantize,
    quantize_joint,
)
from .estimators import Inpainter, Retargeter, VideoAnalogy, VideoGenerator
from .io import read_mask, read_tensor, read_video, write_tensor, write_video
from .metrics import SampleSet, coherence_audit, diversity_index
from .nnf import NNField, exhaustive_nnf, patch_mse, patchmatch_nnf, uniform_weights
from .patches import PatchGrid, PatchSpec, fold_median, unfold
from .pipelines import CueMask, PipelineConfig, analogies, generate, inpaint, retarget
from .pyramid import Pyramid, ScaleFactors, build_pyramid, pyramid_shapes
from .video import make_replicated_noise, psnr, resize_tricubic
from .vpnn import VpnnConfig, key_rareness, run_scale, vpnn_step

__version__ = "0.1.0"

__all__ = [
    "PatchGrid",
    "PatchSpec",
    "PipelineConfig",
    "CueMask",
    "NNField",
    "Pyramid",
    "SampleSet",
    "ScaleFactors",
    "VpnnConfig",
    "VideoGenerator",
    "Retargeter",
    "Inpainter",
    "VideoAnalogy",
    "analogies",
    "block_flow",
    "build_pyramid",
    "coherence_audit",
    "diversity_index",
    "dynamic_structure",
    "exhaustive_nnf",
    "flow_magnitude",
    "fold_median",
    "generate",
    "inpaint",
    "key_rareness",
    "kmeans_quantize",
    "make_replicated_noise",
    "patch_mse",
    "patchmatch_nnf",
    "psnr",
    "pyramid_shapes",
    "quantize_joint",
    "read_mask",
    "read_tensor",
    "read_video",
    "resize_tricubic",
    "retarget",
    "run_scale",
    "unfold",
    "uniform_weights",
    "vpnn_step",
    "write_tensor",
    "write_video",
]

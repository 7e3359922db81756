"""skelforge: label-conditioned diffusion generation of 3D skeleton motion
for recognition data augmentation."""

__version__ = "0.1.0"

from .dataset import DatasetManifest, MotionClip, one_hot, split_fraction
from .denoiser import Denoiser, ModelConfig, init_parameters
from .diffusion import NoiseSchedule, make_linear_schedule, posterior_step, q_sample, training_loss
from .features import (
    FEATURE_WIDTH,
    NormalizationStats,
    crop_window,
    decode_features,
    denormalize,
    encode_features,
    fit_normalization,
    normalize,
)
from .sampler import GeneratedBatch, SamplingConfig, generate, grm_filter, sample_loop
from .skeleton import Skeleton, default_skeleton
from .toydata import generate_toy_dataset

__all__ = [
    "DatasetManifest", "MotionClip", "one_hot", "split_fraction",
    "Denoiser", "ModelConfig", "init_parameters",
    "NoiseSchedule", "make_linear_schedule", "posterior_step", "q_sample", "training_loss",
    "FEATURE_WIDTH", "NormalizationStats", "crop_window", "decode_features",
    "denormalize", "encode_features", "fit_normalization", "normalize",
    "GeneratedBatch", "SamplingConfig", "generate", "grm_filter", "sample_loop",
    "Skeleton", "default_skeleton", "generate_toy_dataset",
    "__version__",
]

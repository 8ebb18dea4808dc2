from .cache import AttributionCache
from .gradcam import GradCam, grad_cam
from .maps import AttributionMap, config_digest, read_map_array, write_map_array
from .randmask import RandomMask, random_mask_like
from .samplers import BaselinePool, BaselineSampler
from .saliency import (SoundnessSaliency, composite_sample, entropy,
                       optimize_ss_mask, ss_objective)

__all__ = [
    "AttributionCache", "AttributionMap", "BaselinePool", "BaselineSampler",
    "GradCam", "RandomMask", "SoundnessSaliency", "composite_sample",
    "config_digest", "entropy", "grad_cam", "optimize_ss_mask",
    "random_mask_like", "read_map_array", "ss_objective", "write_map_array",
]

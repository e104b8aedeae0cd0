from .config import AugmentationSpec, ConfigError, format_spec, load_spec, parse_spec, save_spec
from .photometric import coarse_dropout, intensity_jitter, normalize_intensity
from .pipeline import (
    Sample,
    Stack25,
    augment,
    augment_arrays,
    augment_stack,
    elastic,
    hflip,
    rotate,
    stack_25d,
)
from .rng import Stage, stage_rng
from .spatial import resize_image, resize_mask

__all__ = [
    "AugmentationSpec",
    "ConfigError",
    "Sample",
    "Stack25",
    "Stage",
    "augment",
    "augment_arrays",
    "augment_stack",
    "coarse_dropout",
    "elastic",
    "format_spec",
    "hflip",
    "intensity_jitter",
    "load_spec",
    "normalize_intensity",
    "parse_spec",
    "resize_image",
    "resize_mask",
    "rotate",
    "save_spec",
    "stack_25d",
    "stage_rng",
]

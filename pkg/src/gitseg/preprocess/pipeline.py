"""Sample-level transforms and the seeded augmentation pipeline.

Stage order is fixed: resize, horizontal flip, rotation, elastic warp,
coarse dropout, intensity jitter. Geometric stages move the image and every
mask through one shared sampling grid; the photometric stages touch the
image only (dropout may optionally cut masks too).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from ..core import ORGANS, BinaryMask, NormalizedImage, OrganClass, SliceKey
from ..errors import InvalidShapeError, ShapeMismatchError
from .config import AugmentationSpec
from .photometric import apply_jitter, cut_holes, draw_holes, draw_jitter
from .rng import Stage, stage_rng
from .spatial import (
    elastic_arrays,
    flip_arrays,
    resize_bilinear,
    resize_nearest,
    rotate_arrays,
)


@dataclass(frozen=True)
class Sample:
    image: NormalizedImage
    masks: Mapping[OrganClass, BinaryMask]
    key: SliceKey

    def __post_init__(self):
        if set(self.masks) != set(ORGANS):
            raise ValueError("a sample needs exactly one mask per organ class")
        for organ, m in self.masks.items():
            if m.shape != self.image.shape:
                raise ShapeMismatchError(
                    f"{organ.name} mask is {m.width}x{m.height}, "
                    f"image is {self.image.width}x{self.image.height}"
                )

    def mask_array(self) -> np.ndarray:
        return np.stack([self.masks[o].bits for o in ORGANS])

    @classmethod
    def from_arrays(cls, image: np.ndarray, masks: np.ndarray, key: SliceKey) -> "Sample":
        return cls(
            NormalizedImage(image),
            {o: BinaryMask(m) for o, m in zip(ORGANS, masks)},
            key,
        )


@dataclass(frozen=True)
class Stack25:
    """Previous, current and next slice as three channels."""

    channels: tuple[NormalizedImage, NormalizedImage, NormalizedImage]

    def __post_init__(self):
        if len(self.channels) != 3:
            raise InvalidShapeError(f"a 2.5D stack has 3 channels, got {len(self.channels)}")
        shape = self.channels[0].shape
        if any(c.shape != shape for c in self.channels):
            raise ShapeMismatchError("2.5D channels must share one shape")
        object.__setattr__(self, "channels", tuple(self.channels))

    @property
    def width(self) -> int:
        return self.channels[0].width

    @property
    def height(self) -> int:
        return self.channels[0].height

    @property
    def array(self) -> np.ndarray:
        return np.stack([c.values for c in self.channels])

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "Stack25":
        return cls(tuple(NormalizedImage(c) for c in arr))


def stack_25d(volume: Sequence[NormalizedImage], index: int) -> Stack25:
    """Channels ``(index-1, index, index+1)`` with edge replication at the ends."""
    n = len(volume)
    if not 0 <= index < n:
        raise IndexError(f"slice index {index} outside volume of depth {n}")
    prev_i, next_i = max(index - 1, 0), min(index + 1, n - 1)
    return Stack25((volume[prev_i], volume[index], volume[next_i]))


def _rebuild(sample: Sample, image: np.ndarray, masks: np.ndarray) -> Sample:
    return Sample.from_arrays(image[0], masks, sample.key)


def hflip(sample: Sample) -> Sample:
    image, masks = flip_arrays(sample.image.values[None], sample.mask_array())
    return _rebuild(sample, image, masks)


def rotate(sample: Sample, angle_deg: float) -> Sample:
    image, masks = rotate_arrays(sample.image.values[None], sample.mask_array(), angle_deg)
    return _rebuild(sample, image, masks)


def elastic(sample: Sample, alpha: float, sigma: float, rng) -> Sample:
    if alpha < 0 or not sigma > 0:
        raise ValueError("elastic needs alpha >= 0 and sigma > 0")
    image, masks = elastic_arrays(
        sample.image.values[None], sample.mask_array(), alpha, sigma, rng
    )
    return _rebuild(sample, image, masks)


def augment_arrays(image: np.ndarray, masks: np.ndarray, key: SliceKey, spec: AugmentationSpec):
    """Run the full pipeline on ``(C, H, W)`` intensities and ``(K, H, W)`` masks.

    Every channel shares the same geometric draw and the same jitter, so a
    2.5D stack is augmented as one unit.
    """
    w, h = spec.target_width, spec.target_height
    image = resize_bilinear(image, w, h)
    masks = resize_nearest(masks, w, h)

    rng = stage_rng(spec.seed, key, Stage.FLIP)
    if rng.random() < spec.hflip_prob:
        image, masks = flip_arrays(image, masks)

    if spec.rotate_max_deg > 0:
        rng = stage_rng(spec.seed, key, Stage.ROTATE)
        angle = rng.uniform(-spec.rotate_max_deg, spec.rotate_max_deg)
        image, masks = rotate_arrays(image, masks, angle)

    rng = stage_rng(spec.seed, key, Stage.ELASTIC)
    if rng.random() < spec.elastic_prob:
        image, masks = elastic_arrays(image, masks, spec.elastic_alpha, spec.elastic_sigma, rng)

    rng = stage_rng(spec.seed, key, Stage.DROPOUT)
    holes = draw_holes(h, w, spec, rng)
    image = cut_holes(image, holes)
    if spec.dropout_masks:
        masks = cut_holes(masks, holes)

    rng = stage_rng(spec.seed, key, Stage.JITTER)
    gain, offset = draw_jitter(spec, rng)
    image = apply_jitter(image, gain, offset)
    return image, masks


def augment(sample: Sample, spec: AugmentationSpec) -> Sample:
    image, masks = augment_arrays(sample.image.values[None], sample.mask_array(), sample.key, spec)
    return _rebuild(sample, image, masks)


def augment_stack(
    stack: Stack25,
    masks: Mapping[OrganClass, BinaryMask],
    key: SliceKey,
    spec: AugmentationSpec,
) -> tuple[Stack25, dict[OrganClass, BinaryMask]]:
    mask_arr = np.stack([masks[o].bits for o in ORGANS])
    image, mask_arr = augment_arrays(stack.array, mask_arr, key, spec)
    return Stack25.from_array(image), {o: BinaryMask(m) for o, m in zip(ORGANS, mask_arr)}

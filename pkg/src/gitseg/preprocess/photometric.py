"""Intensity normalisation, brightness/contrast jitter and coarse dropout."""

from __future__ import annotations

import numpy as np

from ..core import NormalizedImage, SliceImage
from ..errors import InvalidShapeError
from .config import AugmentationSpec


def normalize_intensity(img: SliceImage) -> NormalizedImage:
    """Per-slice min-max scaling to [0, 1]; a constant slice maps to zeros."""
    px = img.pixels.astype(np.float64)
    lo, hi = px.min(), px.max()
    if hi == lo:
        return NormalizedImage(np.zeros_like(px))
    return NormalizedImage((px - lo) / (hi - lo))


def draw_jitter(spec: AugmentationSpec, rng) -> tuple[float, float]:
    """Contrast gain and brightness offset, in that draw order."""
    lo, hi = spec.contrast_range
    gain = float(rng.uniform(lo, hi))
    offset = float(rng.uniform(-spec.brightness_delta, spec.brightness_delta))
    return gain, offset


def apply_jitter(arr: np.ndarray, gain: float, offset: float) -> np.ndarray:
    if gain == 1.0 and offset == 0.0:
        return arr.copy()
    return np.clip(gain * arr + offset, 0.0, 1.0)


def intensity_jitter(image: NormalizedImage, spec: AugmentationSpec, rng) -> NormalizedImage:
    gain, offset = draw_jitter(spec, rng)
    return NormalizedImage(apply_jitter(image.values, gain, offset))


def draw_holes(height: int, width: int, spec: AugmentationSpec, rng):
    """Hole rectangles ``(x, y, w, h)``; empty unless the stage fires.

    Draw order: one uniform for the stage probability, then per hole its
    height, width, top row and left column.
    """
    if spec.dropout_holes == 0:
        return []
    if spec.dropout_hole_w[1] > width or spec.dropout_hole_h[1] > height:
        raise InvalidShapeError(
            f"dropout holes up to {spec.dropout_hole_w[1]}x{spec.dropout_hole_h[1]} "
            f"do not fit a {width}x{height} image"
        )
    if not rng.random() < spec.dropout_prob:
        return []
    holes = []
    for _ in range(spec.dropout_holes):
        h = int(rng.integers(spec.dropout_hole_h[0], spec.dropout_hole_h[1], endpoint=True))
        w = int(rng.integers(spec.dropout_hole_w[0], spec.dropout_hole_w[1], endpoint=True))
        y = int(rng.integers(0, height - h, endpoint=True))
        x = int(rng.integers(0, width - w, endpoint=True))
        holes.append((x, y, w, h))
    return holes


def cut_holes(arr: np.ndarray, holes) -> np.ndarray:
    out = arr.copy()
    for x, y, w, h in holes:
        out[..., y : y + h, x : x + w] = 0
    return out


def coarse_dropout(image: NormalizedImage, spec: AugmentationSpec, rng) -> NormalizedImage:
    holes = draw_holes(image.height, image.width, spec, rng)
    return NormalizedImage(cut_holes(image.values, holes))

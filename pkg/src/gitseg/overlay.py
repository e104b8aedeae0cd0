"""Label overlays: translucent class colours over the grayscale slice."""

from __future__ import annotations

from typing import Mapping

import numpy as np

from .core import ORGANS, BinaryMask, OrganClass, SliceImage
from .errors import ShapeMismatchError

ALPHA = 0.4
CLASS_COLORS = {
    OrganClass.LARGE_BOWEL: (255, 0, 0),
    OrganClass.SMALL_BOWEL: (0, 255, 0),
    OrganClass.STOMACH: (0, 0, 255),
}


def grayscale_base(image: SliceImage) -> np.ndarray:
    """Min-max stretch to 8 bits; a constant slice renders black."""
    px = image.pixels.astype(np.float64)
    lo, hi = px.min(), px.max()
    gray = np.zeros_like(px) if hi == lo else np.rint((px - lo) * (255.0 / (hi - lo)))
    return gray.astype(np.uint8)


def render_overlay(
    image: SliceImage, masks: Mapping[OrganClass, BinaryMask], alpha: float = ALPHA
) -> np.ndarray:
    """RGB ``(H, W, 3)`` uint8 render.

    Classes are blended one after another in organ order (large bowel,
    small bowel, stomach), each as ``out = (1 - alpha) * out + alpha * color``
    on its foreground only.
    """
    base = grayscale_base(image)
    rgb = np.repeat(base[:, :, None], 3, axis=2)
    acc = rgb.astype(np.float64)
    touched = np.zeros(base.shape, dtype=bool)
    for organ in ORGANS:
        m = masks.get(organ)
        if m is None:
            continue
        if m.shape != image.shape:
            raise ShapeMismatchError(
                f"{organ.name} mask is {m.width}x{m.height}, image is {image.width}x{image.height}"
            )
        fg = m.bits
        color = np.asarray(CLASS_COLORS[organ], dtype=np.float64)
        acc[fg] = (1.0 - alpha) * acc[fg] + alpha * color
        touched |= fg
    rgb[touched] = np.rint(acc[touched]).astype(np.uint8)
    return rgb

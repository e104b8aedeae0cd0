"""Geometric transforms.

Intensities are resampled bilinearly and masks by nearest neighbour, always
through the same source-coordinate grid so image and labels stay aligned.
The array helpers take channel-first stacks, ``(C, H, W)``; outside the
frame both kinds of sampling read zeros.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.ndimage import gaussian_filter

from ..core import BinaryMask, NormalizedImage
from ..errors import InvalidShapeError


def _axis_weights(n_out: int, n_in: int):
    # half-pixel centres, clamped to the edge (same convention as OpenCV/PIL)
    src = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
    src = np.clip(src, 0.0, n_in - 1)
    lo = np.floor(src).astype(np.intp)
    hi = np.minimum(lo + 1, n_in - 1)
    return lo, hi, src - lo


def resize_bilinear(arr: np.ndarray, width: int, height: int) -> np.ndarray:
    """Resize ``(C, H, W)`` float data to ``(C, height, width)``."""
    _, h, w = arr.shape
    if (h, w) == (height, width):
        return arr.copy()
    y0, y1, ty = _axis_weights(height, h)
    x0, x1, tx = _axis_weights(width, w)
    top, bottom = arr[:, y0, :], arr[:, y1, :]
    rows = top + ty[None, :, None] * (bottom - top)
    left, right = rows[:, :, x0], rows[:, :, x1]
    out = left + tx[None, None, :] * (right - left)
    return np.clip(out, 0.0, 1.0)


def resize_nearest(arr: np.ndarray, width: int, height: int) -> np.ndarray:
    """Nearest-neighbour resize of ``(C, H, W)`` data in exact integer arithmetic."""
    _, h, w = arr.shape
    ys = ((2 * np.arange(height) + 1) * h) // (2 * height)
    xs = ((2 * np.arange(width) + 1) * w) // (2 * width)
    return arr[:, ys[:, None], xs[None, :]]


def _check_target(width: int, height: int) -> None:
    if width < 1 or height < 1:
        raise InvalidShapeError(f"invalid target size {width}x{height}")


def resize_image(img: NormalizedImage, width: int, height: int) -> NormalizedImage:
    _check_target(width, height)
    return NormalizedImage(resize_bilinear(img.values[None], width, height)[0])


def resize_mask(mask: BinaryMask, width: int, height: int) -> BinaryMask:
    _check_target(width, height)
    return BinaryMask(resize_nearest(mask.bits[None], width, height)[0])


def sample_bilinear(arr: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Sample ``(C, H, W)`` at real source coordinates; zeros outside the frame."""
    c, h, w = arr.shape
    padded = np.zeros((c, h + 2, w + 2), dtype=arr.dtype)
    padded[:, 1:-1, 1:-1] = arr
    # shift into padded coordinates and keep every tap inside the padding
    px = np.clip(xs + 1.0, 0.0, w + 1.0)
    py = np.clip(ys + 1.0, 0.0, h + 1.0)
    x0 = np.minimum(np.floor(px).astype(np.intp), w)
    y0 = np.minimum(np.floor(py).astype(np.intp), h)
    tx, ty = px - x0, py - y0
    a = padded[:, y0, x0]
    b = padded[:, y0, x0 + 1]
    cc = padded[:, y0 + 1, x0]
    d = padded[:, y0 + 1, x0 + 1]
    top = a + tx * (b - a)
    bottom = cc + tx * (d - cc)
    return np.clip(top + ty * (bottom - top), 0.0, 1.0)


def sample_nearest(arr: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    c, h, w = arr.shape
    xi = np.floor(xs + 0.5).astype(np.intp)
    yi = np.floor(ys + 0.5).astype(np.intp)
    inside = (xi >= 0) & (xi < w) & (yi >= 0) & (yi < h)
    out = np.zeros((c,) + xs.shape, dtype=arr.dtype)
    out[:, inside] = arr[:, yi[inside], xi[inside]]
    return out


def flip_arrays(image: np.ndarray, masks: np.ndarray):
    return image[..., ::-1].copy(), masks[..., ::-1].copy()


def rotation_grid(width: int, height: int, angle_deg: float):
    """Source coordinates for a rotation about the image centre.

    Positive angles turn the content counter-clockwise as displayed (rows
    running downward).
    """
    theta = math.radians(angle_deg)
    c, s = math.cos(theta), math.sin(theta)
    cx, cy = (width - 1) / 2.0, (height - 1) / 2.0
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    dx, dy = xx - cx, yy - cy
    return cx + c * dx - s * dy, cy + s * dx + c * dy


def rotate_arrays(image: np.ndarray, masks: np.ndarray, angle_deg: float):
    angle = math.fmod(angle_deg, 360.0)
    if angle == 0.0:
        return image.copy(), masks.copy()
    xs, ys = rotation_grid(image.shape[2], image.shape[1], angle)
    return sample_bilinear(image, xs, ys), sample_nearest(masks, xs, ys)


def displacement_field(height: int, width: int, alpha: float, sigma: float, rng):
    """Smoothed uniform noise scaled by ``alpha``; each component is bounded by ``alpha``."""
    dx = gaussian_filter(rng.uniform(-1.0, 1.0, size=(height, width)), sigma, mode="reflect")
    dy = gaussian_filter(rng.uniform(-1.0, 1.0, size=(height, width)), sigma, mode="reflect")
    return alpha * dx, alpha * dy


def elastic_arrays(image: np.ndarray, masks: np.ndarray, alpha: float, sigma: float, rng):
    if alpha == 0.0:
        return image.copy(), masks.copy()
    _, h, w = image.shape
    dx, dy = displacement_field(h, w, alpha, sigma, rng)
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    xs, ys = xx + dx, yy + dy
    return sample_bilinear(image, xs, ys), sample_nearest(masks, xs, ys)

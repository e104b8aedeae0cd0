"""Procedural mini-datasets in the on-disk layout, for tests and demos."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from . import dataset as ds
from .core import ORGANS, BinaryMask, OrganClass, SliceKey
from .rle import encode_rle


def _ellipse(h, w, cy, cx, ry, rx):
    yy, xx = np.mgrid[0:h, 0:w]
    return ((yy - cy) / ry) ** 2 + ((xx - cx) / rx) ** 2 <= 1.0


def synthetic_slice_masks(rng, width, height, depth):
    """Per-slice class masks for one volume: drifting ellipses that switch
    on and off between slices, so every class has empty and non-empty slices."""
    plans = {}
    for organ in ORGANS:
        first = int(rng.integers(0, max(depth - 1, 1)))
        last = int(rng.integers(first, depth))
        plans[organ] = (
            first,
            last,
            rng.uniform(0.25, 0.75) * height,
            rng.uniform(0.25, 0.75) * width,
            rng.uniform(0.08, 0.2) * height,
            rng.uniform(0.08, 0.2) * width,
        )
    out = []
    for z in range(depth):
        masks = {}
        for organ, (first, last, cy, cx, ry, rx) in plans.items():
            if first <= z <= last:
                drift = 2.0 * (z - first)
                bits = _ellipse(height, width, cy + drift, cx - drift, ry, rx)
            else:
                bits = np.zeros((height, width), bool)
            masks[organ] = BinaryMask(bits)
        out.append(masks)
    return out


def synthetic_image(rng, masks, width, height) -> np.ndarray:
    yy, xx = np.mgrid[0:height, 0:width]
    base = 6000 + 3000 * np.sin(xx / 23.0) * np.cos(yy / 31.0)
    for i, organ in enumerate(ORGANS):
        base = base + (9000 + 4000 * i) * masks[organ].bits
    noise = rng.normal(0.0, 400.0, size=(height, width))
    return np.clip(base + noise, 0, 65535).astype(np.uint16)


def make_synthetic_dataset(
    root,
    cases: int = 2,
    days: int = 1,
    depth: int = 4,
    width: int = 320,
    height: int = 384,
    spacing_xy: float = 1.5,
    seed: int = 0,
) -> dict[SliceKey, dict[OrganClass, BinaryMask]]:
    """Write ``cases x days`` volumes plus ``train.csv`` under ``root``.

    Returns the ground-truth masks keyed by slice.
    """
    root = Path(root)
    rng = np.random.default_rng(seed)
    truth = {}
    for c in range(1, cases + 1):
        case_id = f"case{c}"
        for d in range(1, days + 1):
            scans = root / case_id / f"{case_id}_day{d}" / "scans"
            scans.mkdir(parents=True, exist_ok=True)
            for z, masks in enumerate(synthetic_slice_masks(rng, width, height, depth)):
                key = SliceKey(case_id, d, z)
                name = f"slice_{z + 1:04d}_{width}_{height}_{spacing_xy:.2f}_{spacing_xy:.2f}.png"
                ds.write_png(scans / name, synthetic_image(rng, masks, width, height))
                truth[key] = masks
    rows = [(k, o, encode_rle(m[o])) for k, m in truth.items() for o in ORGANS]
    ds.write_predictions(rows, root / "train.csv")
    return truth

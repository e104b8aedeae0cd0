"""Exact Euclidean distance transform and Hausdorff distance on voxel sets.

The transform is separable: a binary two-sweep along depth, then lower
envelope of parabolas (Felzenszwalb & Huttenlocher) along rows and columns.
Every pass is linear in the voxel count. Squared distances are kept until
the very end, so with unit spacing all intermediate values are exact
integers in float64.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from ..core import MaskVolume
from ..errors import EmptyForegroundError, ShapeMismatchError


@numba.njit(cache=True, nogil=True)
def _envelope(f, n, step, out, v, z):
    # out[q] = min_i ((q - i) * step)^2 + f[i]; f may hold +inf
    first = -1
    for q in range(n):
        if f[q] != np.inf:
            first = q
            break
    if first < 0:
        for q in range(n):
            out[q] = np.inf
        return
    s2 = step * step
    k = 0
    v[0] = first
    z[0] = -np.inf
    z[1] = np.inf
    for q in range(first + 1, n):
        fq = f[q]
        if fq == np.inf:
            continue
        s = 0.0
        while k >= 0:
            p = v[k]
            s = ((fq + s2 * q * q) - (f[p] + s2 * p * p)) / (2.0 * s2 * (q - p))
            if s <= z[k]:
                k -= 1
            else:
                break
        k += 1
        v[k] = q
        z[k] = s if k > 0 else -np.inf
        z[k + 1] = np.inf
    k = 0
    for q in range(n):
        while z[k + 1] < q:
            k += 1
        d = (q - v[k]) * step
        out[q] = d * d + f[v[k]]


@numba.njit(cache=True)
def _depth_pass(mask, sz):
    # 1D distance along depth, swept plane by plane to stay cache friendly
    D, H, W = mask.shape
    g = np.empty((D, H, W))
    last = np.full((H, W), -1, np.int64)
    for zi in range(D):
        for y in range(H):
            for x in range(W):
                if mask[zi, y, x]:
                    last[y, x] = zi
                    g[zi, y, x] = 0.0
                elif last[y, x] >= 0:
                    d = (zi - last[y, x]) * sz
                    g[zi, y, x] = d * d
                else:
                    g[zi, y, x] = np.inf
    last[:, :] = -1
    for zi in range(D - 1, -1, -1):
        for y in range(H):
            for x in range(W):
                if mask[zi, y, x]:
                    last[y, x] = zi
                elif last[y, x] >= 0:
                    d = (last[y, x] - zi) * sz
                    d = d * d
                    if d < g[zi, y, x]:
                        g[zi, y, x] = d
    return g


@numba.njit(cache=True)
def _row_pass(g, sy):
    D, H, W = g.shape
    cols = np.empty((W, H))
    out = np.empty(H)
    v = np.empty(H, np.int64)
    z = np.empty(H + 1)
    for zi in range(D):
        for y in range(H):
            for x in range(W):
                cols[x, y] = g[zi, y, x]
        for x in range(W):
            _envelope(cols[x], H, sy, out, v, z)
            for y in range(H):
                cols[x, y] = out[y]
        for y in range(H):
            for x in range(W):
                g[zi, y, x] = cols[x, y]


@numba.njit(cache=True)
def _column_pass(g, sx):
    D, H, W = g.shape
    out = np.empty(W)
    v = np.empty(W, np.int64)
    z = np.empty(W + 1)
    for zi in range(D):
        for y in range(H):
            row = g[zi, y]
            _envelope(row, W, sx, out, v, z)
            for x in range(W):
                row[x] = out[x]


def squared_edt(mask: np.ndarray, spacing=(1.0, 1.0, 1.0)) -> np.ndarray:
    """Squared distance from every voxel to the nearest ``True`` voxel.

    ``mask`` is ``(depth, height, width)``; ``spacing`` is ``(sx, sy, sz)``.
    Volumes without foreground give ``inf`` everywhere.
    """
    sx, sy, sz = (float(s) for s in spacing)
    mask = np.ascontiguousarray(mask, dtype=np.bool_)
    g = _depth_pass(mask, sz)
    _row_pass(g, sy)
    _column_pass(g, sx)
    return g


@dataclass(frozen=True, eq=False)
class DistanceField:
    """Per-voxel Euclidean distance (mm) to the nearest foreground voxel."""

    values: np.ndarray
    spacing: tuple[float, float, float]

    @property
    def depth(self) -> int:
        return self.values.shape[0]

    @property
    def height(self) -> int:
        return self.values.shape[1]

    @property
    def width(self) -> int:
        return self.values.shape[2]


def edt3d(vol: MaskVolume) -> DistanceField:
    values = np.sqrt(squared_edt(vol.data, vol.spacing))
    values.flags.writeable = False
    return DistanceField(values, vol.spacing)


def _check_pair(pm: MaskVolume, om: MaskVolume) -> None:
    if pm.shape != om.shape:
        raise ShapeMismatchError(f"volume shapes differ: {pm.shape} vs {om.shape}")
    if pm.spacing != om.spacing:
        raise ShapeMismatchError(f"voxel spacing differs: {pm.spacing} vs {om.spacing}")


def _check_nonempty(pm: MaskVolume, om: MaskVolume) -> None:
    for name, vol in (("predicted", pm), ("reference", om)):
        if not vol.data.any():
            raise EmptyForegroundError(f"{name} volume has no foreground voxels")


def _bounding_box(a: np.ndarray, b: np.ndarray) -> tuple[slice, ...]:
    union = a | b
    box = []
    for axis in range(3):
        other = tuple(i for i in range(3) if i != axis)
        hit = np.flatnonzero(union.any(axis=other))
        box.append(slice(int(hit[0]), int(hit[-1]) + 1))
    return tuple(box)


@numba.njit(cache=True)
def _directed_max(src, dst, sx, sy, sz):
    # max over src voxels of the squared distance to dst; rows and planes
    # holding no src-outside-dst voxel skip the last two passes entirely
    D, H, W = dst.shape
    g = _depth_pass(dst, sz)
    need = np.zeros((D, H), np.bool_)
    for zi in range(D):
        for y in range(H):
            for x in range(W):
                if src[zi, y, x] and not dst[zi, y, x]:
                    need[zi, y] = True
                    break
    cols = np.empty((W, H))
    n = max(H, W)
    out = np.empty(n)
    v = np.empty(n, np.int64)
    z = np.empty(n + 1)
    worst = 0.0
    for zi in range(D):
        if not need[zi].any():
            continue
        for y in range(H):
            for x in range(W):
                cols[x, y] = g[zi, y, x]
        for x in range(W):
            _envelope(cols[x], H, sy, out, v, z)
            for y in range(H):
                cols[x, y] = out[y]
        for y in range(H):
            if not need[zi, y]:
                continue
            row = cols[:, y].copy()
            _envelope(row, W, sx, out, v, z)
            for x in range(W):
                if src[zi, y, x] and out[x] > worst:
                    worst = out[x]
    return worst


def directed_sq_hausdorff(src: np.ndarray, dst: np.ndarray, spacing) -> float:
    """``max`` over ``src`` voxels of the squared distance to ``dst``."""
    sx, sy, sz = (float(s) for s in spacing)
    src = np.ascontiguousarray(src, dtype=np.bool_)
    dst = np.ascontiguousarray(dst, dtype=np.bool_)
    return float(_directed_max(src, dst, sx, sy, sz))


def hausdorff_fast(pm: MaskVolume, om: MaskVolume) -> float:
    """Symmetric Hausdorff distance (mm) via two distance transforms.

    Equal to the maximum of ``edt3d(om)`` over ``pm`` voxels and vice versa.
    Both transforms run on the bounding box of the union of the two
    foregrounds (every nearest point lies inside it, so cropping is exact),
    and rows without a voxel of one set outside the other are skipped.
    """
    _check_pair(pm, om)
    _check_nonempty(pm, om)
    box = _bounding_box(pm.data, om.data)
    a, b = pm.data[box], om.data[box]
    sq = max(
        directed_sq_hausdorff(a, b, pm.spacing),
        directed_sq_hausdorff(b, a, pm.spacing),
    )
    return float(np.sqrt(sq))


def _points(vol: MaskVolume) -> np.ndarray:
    return np.argwhere(vol.data).astype(np.int64)  # (n, 3) as z, y, x


def _directed_sq_brute(src: np.ndarray, dst: np.ndarray, steps, chunk_pairs=1 << 22) -> float:
    sz, sy, sx = steps
    chunk = max(1, chunk_pairs // max(len(dst), 1))
    worst = 0.0
    for lo in range(0, len(src), chunk):
        a = src[lo : lo + chunk]
        dz = (a[:, None, 0] - dst[None, :, 0]) * sz
        dy = (a[:, None, 1] - dst[None, :, 1]) * sy
        dx = (a[:, None, 2] - dst[None, :, 2]) * sx
        # same summation order as the separable transform: depth, rows, columns
        d2 = dz * dz + dy * dy + dx * dx
        worst = max(worst, float(d2.min(axis=1).max()))
    return worst


def hausdorff_brute(pm: MaskVolume, om: MaskVolume) -> float:
    """Symmetric Hausdorff distance (mm) by comparing every voxel pair."""
    _check_pair(pm, om)
    _check_nonempty(pm, om)
    sx, sy, sz = pm.spacing
    a, b = _points(pm), _points(om)
    steps = (sz, sy, sx)
    sq = max(_directed_sq_brute(a, b, steps), _directed_sq_brute(b, a, steps))
    return float(np.sqrt(sq))

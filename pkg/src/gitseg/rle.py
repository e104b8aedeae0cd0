"""Run-length codec for segmentation labels.

Runs are ``start length`` pairs, 1-indexed over the row-major flattening of
the mask (left to right, top to bottom). ``""`` is the blank mask.
"""

from __future__ import annotations

import re

import numpy as np

from .core import BinaryMask, blank_mask
from .errors import InvalidShapeError, MalformedRLEError

_INT = re.compile(r"[0-9]+")
_DIGITS_ONLY = re.compile(r"[0-9\s]*")
_LEADING_ZERO = re.compile(r"(?:^|\s)0")


def _token_error(tokens: list[str]) -> MalformedRLEError:
    for i, tok in enumerate(tokens):
        if not _INT.fullmatch(tok):
            return MalformedRLEError("not-integer", i, f"token {tok!r} is not an integer")
        if int(tok) == 0:
            return MalformedRLEError("non-positive", i, f"token {tok!r} must be positive")
    raise AssertionError("no bad token")  # pragma: no cover


def parse_runs(rle: str) -> tuple[np.ndarray, np.ndarray]:
    """Split RLE text into ``(starts, lengths)`` without any bounds checks."""
    tokens = rle.split()
    if len(tokens) % 2:
        raise MalformedRLEError(
            "odd-count", len(tokens) - 1, f"odd number of tokens ({len(tokens)})"
        )
    # fast path for plain ASCII digits; anything else is located token by token
    if not _DIGITS_ONLY.fullmatch(rle):
        raise _token_error(tokens)
    values = np.array([int(t) for t in tokens], dtype=np.int64)
    if values.size and values.min() <= 0:
        raise _token_error(tokens)
    return values[0::2], values[1::2]


def decode_rle(rle: str, width: int, height: int) -> BinaryMask:
    if width < 1 or height < 1:
        raise InvalidShapeError(f"invalid mask shape {width}x{height}")
    starts, lengths = parse_runs(rle)
    if starts.size == 0:
        return blank_mask(width, height)
    n = width * height
    ends = starts + lengths - 1  # inclusive, 1-indexed
    over = np.flatnonzero(ends > n)
    if over.size:
        i = int(over[0])
        raise MalformedRLEError(
            "out-of-bounds",
            2 * i + 1,
            f"run {starts[i]} {lengths[i]} exceeds {n} pixels",
        )
    order = np.argsort(starts, kind="stable")
    s_sorted, e_sorted = starts[order], ends[order]
    clash = np.flatnonzero(s_sorted[1:] <= e_sorted[:-1])
    if clash.size:
        i = int(order[clash[0] + 1])
        raise MalformedRLEError(
            "overlap", 2 * i, f"run starting at {starts[i]} overlaps another run"
        )
    delta = np.zeros(n + 1, dtype=np.int8)
    delta[starts - 1] += 1
    delta[ends] -= 1
    bits = np.cumsum(delta[:n], dtype=np.int8).astype(np.bool_)
    return BinaryMask(bits.reshape(height, width))


def encode_rle(mask: BinaryMask) -> str:
    """Canonical encoding: maximal runs, ascending, single spaces."""
    flat = mask.bits.ravel().view(np.uint8)
    padded = np.concatenate(([0], flat, [0])).astype(np.int8)
    edges = np.flatnonzero(np.diff(padded))
    if edges.size == 0:
        return ""
    runs = edges.reshape(-1, 2).copy()
    runs[:, 1] -= runs[:, 0]
    runs[:, 0] += 1
    return " ".join(map(str, runs.ravel().tolist()))


def is_canonical(rle: str) -> bool:
    """True when ``rle`` is exactly what :func:`encode_rle` would emit."""
    if rle == "":
        return True
    if rle != " ".join(rle.split()) or rle != rle.strip():
        return False
    try:
        starts, lengths = parse_runs(rle)
    except MalformedRLEError:
        return False
    if _LEADING_ZERO.search(rle):
        return False
    ends = starts + lengths  # exclusive
    # maximal runs: the next run starts strictly after a gap
    return bool(np.all(starts[1:] > ends[:-1]))


def foreground_count(rle: str) -> int:
    _, lengths = parse_runs(rle)
    return int(lengths.sum())

"""Domain types shared by every part of the pipeline.

All arrays are stored row-major with shape ``(height, width)`` for planes and
``(depth, height, width)`` for volumes. Constructors validate and then freeze
their arrays (``writeable=False``), so instances are safe to share between
threads.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    EmptyVolumeError,
    InvalidShapeError,
    ParseError,
    ShapeMismatchError,
    UnknownClassError,
)

DEFAULT_SPACING = (1.5, 1.5, 3.0)


def _frozen(arr: np.ndarray) -> np.ndarray:
    # copy anything the caller could still mutate
    if arr.flags.writeable or arr.base is not None or not arr.flags.c_contiguous:
        arr = np.array(arr, order="C", copy=True)
    arr.flags.writeable = False
    return arr


def _check_plane(arr: np.ndarray, what: str) -> None:
    if arr.ndim != 2:
        raise InvalidShapeError(f"{what} must be 2D, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise InvalidShapeError(f"{what} has zero dimension: {arr.shape}")


def _check_unit_interval(arr: np.ndarray, what: str) -> None:
    if arr.size and not (np.all(arr >= 0.0) and np.all(arr <= 1.0)):
        raise ValueError(f"{what} values must lie in [0, 1]")


def _reshape_flat(width: int, height: int, flat, dtype) -> np.ndarray:
    if width < 1 or height < 1:
        raise InvalidShapeError(f"invalid shape {width}x{height}")
    arr = np.asarray(flat, dtype=dtype)
    if arr.size != width * height:
        raise InvalidShapeError(
            f"expected {width * height} values for {width}x{height}, got {arr.size}"
        )
    return arr.reshape(height, width)


class _Plane:
    """Width/height accessors over a ``(height, width)`` array attribute."""

    _array_field = ""

    @property
    def array(self) -> np.ndarray:
        return getattr(self, self._array_field)

    @property
    def height(self) -> int:
        return self.array.shape[0]

    @property
    def width(self) -> int:
        return self.array.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.array.shape

    def flat(self) -> list:
        return self.array.ravel().tolist()

    def __eq__(self, other):
        if type(other) is not type(self):
            return NotImplemented
        return np.array_equal(self.array, other.array)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class SliceImage(_Plane):
    """One 16-bit grayscale slice."""

    pixels: np.ndarray
    _array_field = "pixels"

    def __post_init__(self):
        arr = np.asarray(self.pixels)
        _check_plane(arr, "SliceImage")
        if arr.dtype != np.uint16:
            if arr.size and (arr.min() < 0 or arr.max() > 65535):
                raise ValueError("SliceImage pixels must fit in 16 bits")
            if np.issubdtype(arr.dtype, np.floating) and not np.all(arr == np.round(arr)):
                raise ValueError("SliceImage pixels must be integers")
            arr = arr.astype(np.uint16)
        object.__setattr__(self, "pixels", _frozen(arr))

    @classmethod
    def from_flat(cls, width: int, height: int, pixels) -> "SliceImage":
        return cls(_reshape_flat(width, height, pixels, np.int64))


@dataclass(frozen=True, eq=False)
class NormalizedImage(_Plane):
    """Real intensities in [0, 1]."""

    values: np.ndarray
    _array_field = "values"

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        _check_plane(arr, "NormalizedImage")
        _check_unit_interval(arr, "NormalizedImage")
        object.__setattr__(self, "values", _frozen(arr))

    @classmethod
    def from_flat(cls, width: int, height: int, values) -> "NormalizedImage":
        return cls(_reshape_flat(width, height, values, np.float64))


@dataclass(frozen=True, eq=False)
class ProbMap(_Plane):
    """Per-pixel foreground probability."""

    values: np.ndarray
    _array_field = "values"

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        _check_plane(arr, "ProbMap")
        _check_unit_interval(arr, "ProbMap")
        object.__setattr__(self, "values", _frozen(arr))

    @classmethod
    def from_flat(cls, width: int, height: int, values) -> "ProbMap":
        return cls(_reshape_flat(width, height, values, np.float64))

    @classmethod
    def constant(cls, width: int, height: int, value: float) -> "ProbMap":
        return cls(np.full((height, width), float(value)))


def _as_bits(arr) -> np.ndarray:
    arr = np.asarray(arr)
    if arr.dtype != np.bool_:
        if arr.size and not np.all((arr == 0) | (arr == 1)):
            raise ValueError("mask elements must be 0 or 1")
        arr = arr.astype(np.bool_)
    return arr


@dataclass(frozen=True, eq=False)
class BinaryMask(_Plane):
    """Foreground bits of one plane, stored as a boolean array."""

    bits: np.ndarray
    _array_field = "bits"

    def __post_init__(self):
        arr = _as_bits(self.bits)
        _check_plane(arr, "BinaryMask")
        object.__setattr__(self, "bits", _frozen(arr))

    @classmethod
    def from_flat(cls, width: int, height: int, bits) -> "BinaryMask":
        return cls(_reshape_flat(width, height, bits, np.int64))

    def flat(self) -> list[int]:
        return self.bits.ravel().astype(np.uint8).tolist()

    @property
    def count(self) -> int:
        return int(np.count_nonzero(self.bits))


def blank_mask(width: int, height: int) -> BinaryMask:
    if width < 1 or height < 1:
        raise InvalidShapeError(f"invalid mask shape {width}x{height}")
    return BinaryMask(np.zeros((height, width), dtype=np.bool_))


def _check_spacing(spacing) -> tuple[float, float, float]:
    sp = tuple(float(s) for s in spacing)
    if len(sp) != 3 or not all(np.isfinite(s) and s > 0 for s in sp):
        raise ValueError(f"spacing must be three positive numbers, got {spacing!r}")
    return sp


@dataclass(frozen=True, eq=False)
class MaskVolume:
    """Ordered stack of slice masks with voxel spacing ``(sx, sy, sz)`` in mm.

    ``data`` has shape ``(depth, height, width)``.
    """

    data: np.ndarray
    spacing: tuple[float, float, float] = DEFAULT_SPACING

    def __post_init__(self):
        arr = _as_bits(self.data)
        if arr.ndim != 3:
            raise InvalidShapeError(f"MaskVolume must be 3D, got shape {arr.shape}")
        if arr.shape[0] < 1:
            raise EmptyVolumeError("volume has no slices")
        if arr.shape[1] < 1 or arr.shape[2] < 1:
            raise InvalidShapeError(f"volume has zero dimension: {arr.shape}")
        object.__setattr__(self, "data", _frozen(arr))
        object.__setattr__(self, "spacing", _check_spacing(self.spacing))

    @property
    def depth(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.data.shape

    @property
    def count(self) -> int:
        return int(np.count_nonzero(self.data))

    @property
    def slices(self) -> list[BinaryMask]:
        return [BinaryMask(s) for s in self.data]

    def __eq__(self, other):
        if not isinstance(other, MaskVolume):
            return NotImplemented
        return self.spacing == other.spacing and np.array_equal(self.data, other.data)

    __hash__ = None


def make_volume(slices: Sequence[BinaryMask], spacing=DEFAULT_SPACING) -> MaskVolume:
    if len(slices) == 0:
        raise EmptyVolumeError("cannot build a volume from zero slices")
    shape = slices[0].shape
    for i, s in enumerate(slices):
        if s.shape != shape:
            raise ShapeMismatchError(
                f"slice {i} has shape {s.width}x{s.height}, expected {shape[1]}x{shape[0]}"
            )
    return MaskVolume(np.stack([s.bits for s in slices]), spacing)


class OrganClass(enum.Enum):
    LARGE_BOWEL = 0
    SMALL_BOWEL = 1
    STOMACH = 2


ORGANS = tuple(OrganClass)


@dataclass(frozen=True)
class ClassLabels:
    """String labels for the three organ classes as they appear in CSV files."""

    large_bowel: str = "large_bowel"
    small_bowel: str = "small_bowel"
    stomach: str = "stomach"

    def __post_init__(self):
        labels = [self.large_bowel, self.small_bowel, self.stomach]
        if any(not lab for lab in labels) or len(set(labels)) != 3:
            raise ValueError(f"class labels must be non-empty and distinct: {labels}")

    def label(self, organ: OrganClass) -> str:
        return (self.large_bowel, self.small_bowel, self.stomach)[organ.value]

    def parse(self, label: str) -> OrganClass:
        for organ in ORGANS:
            if self.label(organ) == label:
                return organ
        raise UnknownClassError(f"unknown class label {label!r}")


DEFAULT_LABELS = ClassLabels()


@dataclass(frozen=True, order=True)
class SliceKey:
    """Identity of one slice; ``slice_index`` is 0-based within its volume."""

    case_id: str
    day: int
    slice_index: int = field(default=0)

    def __post_init__(self):
        if not self.case_id:
            raise ValueError("case_id must be non-empty")
        if self.day < 0 or self.slice_index < 0:
            raise ValueError("day and slice_index must be non-negative")

    @property
    def volume_id(self) -> str:
        return f"{self.case_id}_day{self.day}"

    def to_id(self) -> str:
        """Dataset id, e.g. ``case123_day20_slice_0001`` (1-based on disk)."""
        return f"{self.case_id}_day{self.day}_slice_{self.slice_index + 1:04d}"

    @classmethod
    def from_id(cls, text: str) -> "SliceKey":
        m = _SLICE_ID.fullmatch(text)
        if not m:
            raise ParseError(f"bad slice id {text!r}; expected case<N>_day<N>_slice_<NNNN>")
        number = int(m.group("slice"))
        if number < 1:
            raise ParseError(f"slice numbers start at 1: {text!r}")
        return cls(m.group("case"), int(m.group("day")), number - 1)


_SLICE_ID = re.compile(r"(?P<case>case\d+)_day(?P<day>\d+)_slice_(?P<slice>\d+)")

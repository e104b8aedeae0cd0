"""Dataset layout, slice images and annotation CSVs.

Default layout (public GI-tract MRI convention)::

    {root}/case123/case123_day20/scans/slice_0001_266_266_1.50_1.50.png

Slice numbers on disk are 1-based; :class:`~gitseg.core.SliceKey` holds the
0-based index. Annotation and prediction files share one CSV schema,
``id,class,segmentation``, UTF-8 with LF line endings.
"""

from __future__ import annotations

import csv
import io
import os
import re
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import cv2
import numpy as np

from .core import (
    DEFAULT_LABELS,
    DEFAULT_SPACING,
    ORGANS,
    BinaryMask,
    ClassLabels,
    MaskVolume,
    OrganClass,
    SliceImage,
    SliceKey,
)
from .errors import DuplicateSliceError, GitSegError, ParseError, ShapeMismatchError
from .rle import decode_rle, parse_runs

CSV_HEADER = ("id", "class", "segmentation")


@dataclass(frozen=True)
class DatasetLayout:
    """Directory and file naming rules; override to read other trees."""

    case_dir: str = r"case(?P<case>\d+)"
    day_dir: str = r"case(?P<case>\d+)_day(?P<day>\d+)"
    scans_dir: str = "scans"
    slice_suffix: str = ".png"
    slice_base: int = 1
    default_slice_thickness: float = DEFAULT_SPACING[2]


DEFAULT_LAYOUT = DatasetLayout()


def _bad(name: str, segment: str, why: str) -> ParseError:
    return ParseError(f"bad slice filename {name!r}: segment {segment!r} {why}")


_DECIMAL = re.compile(r"\d+(\.\d+)?")


def parse_slice_filename(name: str, layout: DatasetLayout = DEFAULT_LAYOUT):
    """``slice_{idx:04d}_{w}_{h}_{sx}_{sy}.png`` to ``(idx, w, h, sx, sy)``.

    ``idx`` is returned as written in the file name.
    """
    if not name.endswith(layout.slice_suffix):
        raise _bad(name, name[name.rfind(".") :] if "." in name else name, "is not the expected suffix")
    parts = name[: -len(layout.slice_suffix)].split("_")
    if parts[0] != "slice":
        raise _bad(name, parts[0], "should be 'slice'")
    if len(parts) != 6:
        raise ParseError(f"bad slice filename {name!r}: expected 6 '_'-separated fields, got {len(parts)}")
    _, idx, w, h, sx, sy = parts
    if not re.fullmatch(r"\d{4}", idx):
        raise _bad(name, idx, "should be a 4-digit slice number")
    for seg, what in ((w, "width"), (h, "height")):
        if not seg.isdigit() or int(seg) < 1:
            raise _bad(name, seg, f"should be a positive integer {what}")
    for seg in (sx, sy):
        if not _DECIMAL.fullmatch(seg) or float(seg) <= 0:
            raise _bad(name, seg, "should be a positive decimal spacing in mm")
    return int(idx), int(w), int(h), float(sx), float(sy)


@dataclass(frozen=True)
class SliceRecord:
    key: SliceKey
    path: Path
    width: int
    height: int
    sx: float
    sy: float


@dataclass(frozen=True)
class DatasetIndex:
    """Slices of each ``(case_id, day)`` volume, sorted by slice index."""

    volumes: Mapping[tuple[str, int], tuple[SliceRecord, ...]] = field(default_factory=dict)
    slice_thickness: float = DEFAULT_SPACING[2]

    def __len__(self) -> int:
        return len(self.volumes)

    def records(self) -> list[SliceRecord]:
        return [r for recs in self.volumes.values() for r in recs]

    def find(self, key: SliceKey) -> SliceRecord:
        recs = self.volumes.get((key.case_id, key.day))
        if recs:
            pos = key.slice_index - recs[0].key.slice_index
            if 0 <= pos < len(recs):
                return recs[pos]
        raise KeyError(key)

    def spacing(self, case_id: str, day: int) -> tuple[float, float, float]:
        first = self.volumes[(case_id, day)][0]
        return (first.sx, first.sy, self.slice_thickness)

    def shape(self, case_id: str, day: int) -> tuple[int, int, int]:
        recs = self.volumes[(case_id, day)]
        return (len(recs), recs[0].height, recs[0].width)


def scan_dataset(root, layout: DatasetLayout = DEFAULT_LAYOUT) -> DatasetIndex:
    root = Path(root)
    if not root.is_dir():
        raise FileNotFoundError(f"dataset root {root} does not exist")
    case_re, day_re = re.compile(layout.case_dir), re.compile(layout.day_dir)
    found: dict[tuple[str, int], dict[int, SliceRecord]] = defaultdict(dict)
    for case_path in sorted(root.iterdir()):
        cm = case_re.fullmatch(case_path.name)
        if not cm or not case_path.is_dir():
            continue
        for day_path in sorted(case_path.iterdir()):
            dm = day_re.fullmatch(day_path.name)
            if not dm or not day_path.is_dir() or dm.group("case") != cm.group("case"):
                continue
            scans = day_path / layout.scans_dir
            if not scans.is_dir():
                continue
            case_id, day = case_path.name, int(dm.group("day"))
            vol = found[(case_id, day)]
            for f in sorted(os.listdir(scans)):
                if not f.endswith(layout.slice_suffix):
                    continue
                number, w, h, sx, sy = parse_slice_filename(f, layout)
                index = number - layout.slice_base
                if index < 0:
                    raise ParseError(f"{scans / f}: slice number below {layout.slice_base}")
                if index in vol:
                    raise DuplicateSliceError(
                        f"{case_id} day {day}: slice {number} appears twice "
                        f"({vol[index].path.name}, {f})"
                    )
                vol[index] = SliceRecord(SliceKey(case_id, day, index), scans / f, w, h, sx, sy)
    volumes = {}
    for vid in sorted(found):
        by_index = found[vid]
        if not by_index:
            continue
        indices = sorted(by_index)
        if indices != list(range(indices[0], indices[0] + len(indices))):
            missing = sorted(set(range(indices[0], indices[-1] + 1)) - set(indices))
            raise ParseError(f"{vid[0]} day {vid[1]}: missing slice indices {missing[:5]}")
        recs = tuple(by_index[i] for i in indices)
        first = recs[0]
        for r in recs:
            if (r.width, r.height) != (first.width, first.height):
                raise ShapeMismatchError(
                    f"{vid[0]} day {vid[1]}: {r.path.name} is {r.width}x{r.height}, "
                    f"expected {first.width}x{first.height}"
                )
        volumes[vid] = recs
    return DatasetIndex(volumes, layout.default_slice_thickness)


def read_slice(path) -> SliceImage:
    """Load a grayscale PNG; 8-bit data is promoted to 16 bits (x257)."""
    data = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if data is None:
        raise OSError(f"cannot read image {path}")
    if data.ndim != 2:
        raise GitSegError(f"{path}: expected single-channel grayscale, got shape {data.shape}")
    if data.dtype == np.uint8:
        data = data.astype(np.uint16) * 257
    elif data.dtype != np.uint16:
        raise GitSegError(f"{path}: unsupported bit depth ({data.dtype})")
    return SliceImage(data)


def write_png(path, data: np.ndarray) -> None:
    """Write uint8/uint16 grayscale ``(H, W)`` or RGB ``(H, W, 3)`` data."""
    if data.ndim == 3:
        data = cv2.cvtColor(np.ascontiguousarray(data), cv2.COLOR_RGB2BGR)
    if not cv2.imwrite(str(path), np.ascontiguousarray(data)):
        raise OSError(f"cannot write image {path}")


def read_png(path) -> np.ndarray:
    data = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if data is None:
        raise OSError(f"cannot read image {path}")
    if data.ndim == 3:
        data = cv2.cvtColor(data, cv2.COLOR_BGR2RGB)
    return data


def write_slice(path, img: SliceImage) -> None:
    write_png(path, img.pixels)


@dataclass(frozen=True)
class AnnotationRow:
    key: SliceKey
    organ: OrganClass
    segmentation: str = ""

    def sort_key(self):
        return (self.key, self.organ.value)


def load_annotations(csv_path, labels: ClassLabels = DEFAULT_LABELS) -> list[AnnotationRow]:
    rows = []
    with open(csv_path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != CSV_HEADER:
            raise ParseError(f"{csv_path}: line 1: expected header {','.join(CSV_HEADER)}, got {header}")
        for row in reader:
            line = reader.line_num
            if not row:
                continue
            if len(row) != 3:
                raise ParseError(f"{csv_path}: line {line}: expected 3 fields, got {len(row)}")
            try:
                key = SliceKey.from_id(row[0].strip())
                organ = labels.parse(row[1].strip())
                seg = row[2].strip()
                parse_runs(seg)
            except GitSegError as exc:
                raise exc.with_context(f"{csv_path}: line {line}") from None
            rows.append(AnnotationRow(key, organ, seg))
    return rows


def format_predictions(rows: Iterable[tuple[SliceKey, OrganClass, str]], labels: ClassLabels = DEFAULT_LABELS) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for key, organ, rle in sorted(rows, key=lambda r: (r[0], r[1].value)):
        writer.writerow((key.to_id(), labels.label(organ), rle))
    return buf.getvalue()


def write_predictions(rows, path, labels: ClassLabels = DEFAULT_LABELS) -> None:
    rows = [(r.key, r.organ, r.segmentation) if isinstance(r, AnnotationRow) else tuple(r) for r in rows]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(format_predictions(rows, labels))


def annotation_table(rows: Sequence[AnnotationRow]) -> dict[tuple[SliceKey, OrganClass], str]:
    table = {}
    for r in rows:
        if (r.key, r.organ) in table:
            raise DuplicateSliceError(f"duplicate annotation for {r.key.to_id()} {r.organ.name}")
        table[(r.key, r.organ)] = r.segmentation
    return table


def slice_masks(
    table: Mapping[tuple[SliceKey, OrganClass], str], rec: SliceRecord
) -> dict[OrganClass, BinaryMask]:
    """Decode the three class masks of one slice; missing entries are blank."""
    out = {}
    for organ in ORGANS:
        rle = table.get((rec.key, organ), "")
        try:
            out[organ] = decode_rle(rle, rec.width, rec.height)
        except GitSegError as exc:
            raise exc.with_context(f"{rec.key.to_id()} {organ.name}") from None
    return out


def volume_masks(
    table: Mapping[tuple[SliceKey, OrganClass], str],
    index: DatasetIndex,
    case_id: str,
    day: int,
) -> dict[OrganClass, MaskVolume]:
    recs = index.volumes[(case_id, day)]
    planes = {o: [] for o in ORGANS}
    for rec in recs:
        for organ, m in slice_masks(table, rec).items():
            planes[organ].append(m.bits)
    spacing = index.spacing(case_id, day)
    return {o: MaskVolume(np.stack(planes[o]), spacing) for o in ORGANS}

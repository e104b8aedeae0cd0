"""Dataset-level batch operations behind the CLI.

Work fans out per volume (case/day) across processes. Workers write only
their own files and return rows; the parent sorts and writes every shared
file, so the output bytes do not depend on ``jobs``.
"""

from __future__ import annotations

import csv
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from . import dataset as ds
from .core import DEFAULT_LABELS, ORGANS, BinaryMask, ClassLabels, OrganClass, SliceKey
from .ensemble import ClassPresence, FileBacked, predict_slice
from .errors import GitSegError, ParseError
from .metrics.scores import CaseReport, score_case
from .overlay import render_overlay
from .preprocess.config import AugmentationSpec
from .preprocess.photometric import normalize_intensity
from .preprocess.pipeline import Sample, augment, augment_stack, stack_25d
from .rle import encode_rle

MANIFEST_HEADER = ("id", "mode", "path", "width", "height")


def default_jobs() -> int:
    return os.cpu_count() or 1


def parallel_map(fn: Callable, items: Sequence, jobs: int) -> list:
    """Ordered map; runs in-process for ``jobs <= 1`` or a single item."""
    if jobs <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=min(jobs, len(items))) as pool:
        return list(pool.map(fn, items))


def to_uint16(values: np.ndarray) -> np.ndarray:
    return np.rint(values * 65535.0).astype(np.uint16)


def _volume_part(table: Optional[Mapping], recs) -> Optional[dict]:
    """Entries of a slice- or (slice, class)-keyed table that belong to ``recs``."""
    if table is None:
        return None
    keys = {r.key for r in recs}
    return {k: v for k, v in table.items() if (k[0] if isinstance(k, tuple) else k) in keys}


def _masks_for(table, rec) -> dict[OrganClass, BinaryMask]:
    if table is None:
        return {o: BinaryMask(np.zeros((rec.height, rec.width), bool)) for o in ORGANS}
    return ds.slice_masks(table, rec)


@dataclass(frozen=True)
class _PreprocessJob:
    records: tuple
    spec: AugmentationSpec
    out_dir: Path
    mode: str
    table: Optional[dict]


def _preprocess_volume(job: _PreprocessJob):
    manifest, labels = [], []
    images = [normalize_intensity(ds.read_slice(r.path)) for r in job.records]
    sub = job.out_dir / ("images" if job.mode == "gray" else "stacks")
    for i, rec in enumerate(job.records):
        masks = _masks_for(job.table, rec)
        if job.mode == "gray":
            out = augment(Sample(images[i], masks, rec.key), job.spec)
            pixels, out_masks = to_uint16(out.image.values), out.masks
        else:
            stack, out_masks = augment_stack(stack_25d(images, i), masks, rec.key, job.spec)
            pixels = np.moveaxis(to_uint16(stack.array), 0, -1)
        rel = Path(sub.name) / f"{rec.key.to_id()}.png"
        ds.write_png(job.out_dir / rel, pixels)
        manifest.append((rec.key.to_id(), job.mode, rel.as_posix(), job.spec.target_width, job.spec.target_height))
        if job.table is not None:
            labels.extend((rec.key, o, encode_rle(out_masks[o])) for o in ORGANS)
    return manifest, labels


def preprocess_dataset(
    index: ds.DatasetIndex,
    spec: AugmentationSpec,
    out_dir,
    mode: str = "gray",
    annotations: Optional[Sequence[ds.AnnotationRow]] = None,
    jobs: int = 1,
    labels: ClassLabels = DEFAULT_LABELS,
) -> int:
    """Augment every slice (``gray``) or 2.5D stack (``25d``) of ``index``.

    Writes ``images/`` or ``stacks/`` as 16-bit PNGs (stacks as 3-channel
    previous/current/next), ``manifest.csv``, and ``labels.csv`` with the
    transformed masks when annotations are given. Returns the slice count.
    """
    if mode not in ("gray", "25d"):
        raise GitSegError(f"unknown mode {mode!r}; expected gray or 25d")
    out_dir = Path(out_dir)
    (out_dir / ("images" if mode == "gray" else "stacks")).mkdir(parents=True, exist_ok=True)
    table = ds.annotation_table(annotations) if annotations is not None else None
    if table is not None:
        _check_annotation_keys(table, index)
    jobs_list = [
        _PreprocessJob(recs, spec, out_dir, mode, _volume_part(table, recs)) for recs in index.volumes.values()
    ]
    results = parallel_map(_preprocess_volume, jobs_list, jobs)
    manifest = sorted(row for m, _ in results for row in m)
    with open(out_dir / "manifest.csv", "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(MANIFEST_HEADER)
        w.writerows(manifest)
    if table is not None:
        ds.write_predictions([row for _, lab in results for row in lab], out_dir / "labels.csv", labels)
    return len(manifest)


def _check_annotation_keys(table, index: ds.DatasetIndex) -> None:
    for key, _ in sorted(table, key=lambda k: (k[0], k[1].value)):
        try:
            index.find(key)
        except KeyError:
            raise ParseError(f"annotation for unknown slice {key.to_id()}") from None


def load_presence(path, labels: ClassLabels = DEFAULT_LABELS) -> dict[SliceKey, ClassPresence]:
    """Presence CSV ``id,class,probability`` to per-slice presence."""
    per_key: dict[SliceKey, dict] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["id", "class", "probability"]:
            raise ParseError(f"{path}: line 1: expected header id,class,probability")
        for row in reader:
            if not row:
                continue
            line = reader.line_num
            if len(row) != 3:
                raise ParseError(f"{path}: line {line}: expected 3 fields")
            try:
                key = SliceKey.from_id(row[0].strip())
                organ = labels.parse(row[1].strip())
                p = float(row[2])
            except GitSegError as exc:
                raise exc.with_context(f"{path}: line {line}") from None
            except ValueError:
                raise ParseError(f"{path}: line {line}: bad probability {row[2]!r}") from None
            if not 0.0 <= p <= 1.0:
                raise ParseError(f"{path}: line {line}: probability {p} outside [0, 1]")
            per_key.setdefault(key, {})[organ] = p
    out = {}
    for key, probs in per_key.items():
        if set(probs) != set(ORGANS):
            raise ParseError(f"{path}: {key.to_id()} lacks presence for some classes")
        out[key] = ClassPresence(probs)
    return out


@dataclass(frozen=True)
class _EnsembleJob:
    records: tuple
    maps_a: Path
    maps_b: Path
    presence: Mapping[SliceKey, ClassPresence]
    gate_thr: float
    bin_thr: float


def _ensemble_volume(job: _EnsembleJob):
    classifier = FileBacked(presence=job.presence)
    path_a, path_b = FileBacked(job.maps_a), FileBacked(job.maps_b)
    images = [normalize_intensity(ds.read_slice(r.path)) for r in job.records]
    rows = []
    for i, rec in enumerate(job.records):
        if rec.key not in job.presence:
            raise ParseError(f"presence table has no entry for {rec.key.to_id()}")
        masks = predict_slice(
            stack_25d(images, i), images[i], classifier, path_a, path_b, job.gate_thr, job.bin_thr, key=rec.key
        )
        rows.extend((rec.key, o, encode_rle(masks[o])) for o in ORGANS)
    return rows


def ensemble_dataset(
    index: ds.DatasetIndex,
    maps_a,
    maps_b,
    presence: Mapping[SliceKey, ClassPresence],
    gate_thr: float,
    bin_thr: float,
    out_csv,
    jobs: int = 1,
    labels: ClassLabels = DEFAULT_LABELS,
) -> int:
    jobs_list = [
        _EnsembleJob(recs, Path(maps_a), Path(maps_b), _volume_part(presence, recs), gate_thr, bin_thr)
        for recs in index.volumes.values()
    ]
    rows = [r for chunk in parallel_map(_ensemble_volume, jobs_list, jobs) for r in chunk]
    ds.write_predictions(rows, out_csv, labels)
    return len(rows)


@dataclass
class ScoreSummary:
    reports: list
    missing_predictions: int


@dataclass(frozen=True)
class _ScoreJob:
    vid: tuple
    truth: Mapping
    pred: Mapping
    index: ds.DatasetIndex


def _score_volume(job: _ScoreJob) -> CaseReport:
    case_id, day = job.vid
    truth = ds.volume_masks(job.truth, job.index, case_id, day)
    pred = ds.volume_masks(job.pred, job.index, case_id, day)
    return score_case(pred, truth, case_id=f"{case_id}_day{day}")


def score_dataset(
    index: ds.DatasetIndex,
    truth_rows: Sequence[ds.AnnotationRow],
    pred_rows: Sequence[ds.AnnotationRow],
    jobs: int = 1,
    strict: bool = False,
) -> ScoreSummary:
    """Score every volume that has ground-truth rows.

    Prediction rows missing for a truth (slice, class) count as blank masks
    unless ``strict``.
    """
    truth = ds.annotation_table(truth_rows)
    pred = ds.annotation_table(pred_rows)
    for table, what in ((truth, "truth"), (pred, "prediction")):
        for key, _ in sorted(table, key=lambda k: (k[0], k[1].value)):
            try:
                index.find(key)
            except KeyError:
                raise ParseError(f"{what} row for {key.to_id()} has no slice in the dataset") from None
    missing = sorted((k for k in truth if k not in pred), key=lambda k: (k[0], k[1].value))
    if missing and strict:
        key, organ = missing[0]
        raise ParseError(f"no prediction for {key.to_id()} {organ.name} ({len(missing)} missing)")
    vids = sorted({(k.case_id, k.day) for k, _ in truth})
    by_vid: dict[tuple, tuple[dict, dict]] = {v: ({}, {}) for v in vids}
    for (k, o), rle in truth.items():
        by_vid[(k.case_id, k.day)][0][(k, o)] = rle
    for (k, o), rle in pred.items():
        if (k.case_id, k.day) in by_vid:
            by_vid[(k.case_id, k.day)][1][(k, o)] = rle
    jobs_list = [_ScoreJob(v, by_vid[v][0], by_vid[v][1], _sub_index(index, v)) for v in vids]
    reports = parallel_map(_score_volume, jobs_list, jobs)
    return ScoreSummary(reports, len(missing))


def _sub_index(index: ds.DatasetIndex, vid) -> ds.DatasetIndex:
    return ds.DatasetIndex({vid: index.volumes[vid]}, index.slice_thickness)


@dataclass(frozen=True)
class _OverlayJob:
    records: tuple
    table: Mapping
    out_dir: Path


def _overlay_volume(job: _OverlayJob) -> int:
    for rec in job.records:
        rgb = render_overlay(ds.read_slice(rec.path), ds.slice_masks(job.table, rec))
        ds.write_png(job.out_dir / f"{rec.key.to_id()}.png", rgb)
    return len(job.records)


def overlay_dataset(index: ds.DatasetIndex, rows: Sequence[ds.AnnotationRow], out_dir, jobs: int = 1) -> int:
    """One RGB PNG per annotated slice."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    table = ds.annotation_table(rows)
    keys = sorted({k for k, _ in table})
    recs_by_vid: dict[tuple, list] = {}
    for key in keys:
        try:
            rec = index.find(key)
        except KeyError:
            raise ParseError(f"mask row for unknown slice {key.to_id()}") from None
        recs_by_vid.setdefault((key.case_id, key.day), []).append(rec)
    jobs_list = [
        _OverlayJob(tuple(recs), _volume_part(table, recs), out_dir) for _, recs in sorted(recs_by_vid.items())
    ]
    return sum(parallel_map(_overlay_volume, jobs_list, jobs))


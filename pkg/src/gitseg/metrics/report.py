"""CSV serialisation of case reports.

One row per (case, class), then one ``mean`` row per case, then a final
``overall`` row. Floats are written with ``repr`` so they read back exactly;
an undefined Hausdorff distance is an empty cell.
"""

from __future__ import annotations

import csv
import io
from typing import Sequence

import numpy as np

from ..core import DEFAULT_LABELS, ORGANS, ClassLabels
from .scores import CaseReport

REPORT_HEADER = ("case_id", "class", "dice", "hausdorff_mm", "hd_score", "composite")
OVERALL_ID = "overall"
MEAN_CLASS = "mean"


def _num(v) -> str:
    return "" if v is None else repr(float(v))


def format_report(reports: Sequence[CaseReport], labels: ClassLabels = DEFAULT_LABELS) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_HEADER)
    for r in reports:
        for organ in ORGANS:
            s = r.scores[organ]
            w.writerow((r.case_id, labels.label(organ), _num(s.dice), _num(s.hausdorff_mm), _num(s.hd_score), _num(s.composite)))
    for r in reports:
        w.writerow((r.case_id, MEAN_CLASS, _num(r.mean_dice), "", _num(r.mean_hd_score), _num(r.mean_composite)))
    if reports:
        w.writerow(
            (
                OVERALL_ID,
                MEAN_CLASS,
                _num(np.mean([r.mean_dice for r in reports])),
                "",
                _num(np.mean([r.mean_hd_score for r in reports])),
                _num(overall_composite(reports)),
            )
        )
    return buf.getvalue()


def overall_composite(reports: Sequence[CaseReport]) -> float:
    """Unweighted mean of the per-case mean composites."""
    return float(np.mean([r.mean_composite for r in reports]))


def write_report(reports: Sequence[CaseReport], path, labels: ClassLabels = DEFAULT_LABELS) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(format_report(reports, labels))


def read_report(path) -> list[dict]:
    """Rows as dicts with floats (or ``None`` for empty cells)."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    for row in rows:
        for col in REPORT_HEADER[2:]:
            row[col] = float(row[col]) if row[col] != "" else None
    return rows

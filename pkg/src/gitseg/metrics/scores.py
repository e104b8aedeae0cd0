"""Overlap, distance and composite scores for 3D segmentations."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np

from ..core import ORGANS, MaskVolume, OrganClass
from ..errors import OutOfRangeError, ShapeMismatchError
from .distance import hausdorff_fast

DICE_WEIGHT = 0.4
HAUSDORFF_WEIGHT = 0.6


def _check_shapes(pm: MaskVolume, om: MaskVolume) -> None:
    if pm.shape != om.shape:
        raise ShapeMismatchError(f"volume shapes differ: {pm.shape} vs {om.shape}")


def dice(pm: MaskVolume, om: MaskVolume) -> float:
    """``2|PM & OM| / (|PM| + |OM|)``; two empty volumes score 1.0."""
    _check_shapes(pm, om)
    total = pm.count + om.count
    if total == 0:
        return 1.0
    inter = int(np.count_nonzero(pm.data & om.data))
    return 2 * inter / total


def volume_diagonal(vol: MaskVolume) -> float:
    """Physical length between the centres of opposite corner voxels."""
    sx, sy, sz = vol.spacing
    # summed in the distance transform's axis order so HD == diagonal exactly
    dz, dy, dx = (vol.depth - 1) * sz, (vol.height - 1) * sy, (vol.width - 1) * sx
    return math.sqrt(dz * dz + dy * dy + dx * dx)


def hausdorff_or_none(pm: MaskVolume, om: MaskVolume) -> Optional[float]:
    """Hausdorff distance in mm, or ``None`` when either side is empty."""
    _check_shapes(pm, om)
    if pm.count == 0 or om.count == 0:
        return None
    return hausdorff_fast(pm, om)


def _normalize_hd(hd: Optional[float], pm: MaskVolume, om: MaskVolume) -> float:
    if hd is None:
        return 1.0 if pm.count == 0 and om.count == 0 else 0.0
    diag = volume_diagonal(pm)
    if diag == 0.0:
        return 1.0
    return min(1.0, max(0.0, 1.0 - hd / diag))


def hd_score(pm: MaskVolume, om: MaskVolume) -> float:
    """Hausdorff distance mapped to a similarity: ``1 - HD / diagonal``.

    Both empty gives 1.0, exactly one empty gives 0.0.
    """
    return _normalize_hd(hausdorff_or_none(pm, om), pm, om)


def composite(dice_val: float, hd_score_val: float) -> float:
    for name, v in (("dice", dice_val), ("hd_score", hd_score_val)):
        if not 0.0 <= v <= 1.0:
            raise OutOfRangeError(f"{name} must be in [0, 1], got {v!r}")
    return DICE_WEIGHT * dice_val + HAUSDORFF_WEIGHT * hd_score_val


@dataclass(frozen=True)
class ClassScore:
    dice: float
    hausdorff_mm: Optional[float]
    hd_score: float
    composite: float


@dataclass(frozen=True)
class CaseReport:
    case_id: str
    scores: Mapping[OrganClass, ClassScore]

    @property
    def mean_dice(self) -> float:
        return float(np.mean([s.dice for s in self.scores.values()]))

    @property
    def mean_hd_score(self) -> float:
        return float(np.mean([s.hd_score for s in self.scores.values()]))

    @property
    def mean_composite(self) -> float:
        return float(np.mean([s.composite for s in self.scores.values()]))


def score_class(pm: MaskVolume, om: MaskVolume) -> ClassScore:
    d = dice(pm, om)
    hd = hausdorff_or_none(pm, om)
    h = _normalize_hd(hd, pm, om)
    return ClassScore(d, hd, h, composite(d, h))


def score_case(
    pred: Mapping[OrganClass, MaskVolume],
    truth: Mapping[OrganClass, MaskVolume],
    case_id: str = "",
) -> CaseReport:
    scores = {}
    for organ in ORGANS:
        try:
            scores[organ] = score_class(pred[organ], truth[organ])
        except ShapeMismatchError as exc:
            raise ShapeMismatchError(f"{organ.name}: {exc}") from None
    return CaseReport(case_id, scores)

from .distance import DistanceField, edt3d, hausdorff_brute, hausdorff_fast, squared_edt
from .scores import (
    CaseReport,
    ClassScore,
    composite,
    dice,
    hd_score,
    score_case,
    score_class,
    volume_diagonal,
)

__all__ = [
    "CaseReport",
    "ClassScore",
    "DistanceField",
    "composite",
    "dice",
    "edt3d",
    "hausdorff_brute",
    "hausdorff_fast",
    "hd_score",
    "score_case",
    "score_class",
    "squared_edt",
    "volume_diagonal",
]

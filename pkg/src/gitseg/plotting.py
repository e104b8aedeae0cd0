"""Figures written next to score reports."""

from __future__ import annotations

from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .core import DEFAULT_LABELS, ORGANS, ClassLabels  # noqa: E402
from .metrics.scores import CaseReport  # noqa: E402

RC = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "svg.hashsalt": "gitseg",
}

METRICS = (("dice", "Dice"), ("hd_score", "Hausdorff score"), ("composite", "Composite"))


def score_summary_figure(reports: Sequence[CaseReport], path, labels: ClassLabels = DEFAULT_LABELS):
    """Grouped bars of the mean per-class metrics over all cases."""
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(6.2, 3.2))
        x = np.arange(len(ORGANS))
        width = 0.26
        for i, (attr, name) in enumerate(METRICS):
            means = [
                np.mean([getattr(r.scores[o], attr) for r in reports]) if reports else 0.0
                for o in ORGANS
            ]
            ax.bar(x + (i - 1) * width, means, width, label=name)
        overall = np.mean([r.mean_composite for r in reports]) if reports else 0.0
        ax.axhline(overall, color="0.3", lw=0.8, ls="--", label="Overall composite")
        ax.set_xticks(x, [labels.label(o) for o in ORGANS])
        ax.set_ylim(0.0, 1.0)
        ax.set_ylabel("score")
        ax.set_title(f"{len(reports)} case(s), overall composite {overall:.4f}")
        ax.legend(loc="upper left", bbox_to_anchor=(1.0, 1.0), frameon=False)
        fig.tight_layout()
        fig.savefig(path, dpi=120, metadata={"Software": None})
        plt.close(fig)

"""Balanced accuracy and per-dataset threshold tuning.

Predictions follow the rule ``score >= theta``.  Threshold tuning scans
the whole two-decimal grid and returns the lowest threshold achieving the
best balanced accuracy on the given scores.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from ..errors import DegenerateClassBalance


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fn: int
    tn: int
    fp: int

    def __post_init__(self):
        for name in ("tp", "fn", "tn", "fp"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    @property
    def positives(self) -> int:
        return self.tp + self.fn

    @property
    def negatives(self) -> int:
        return self.tn + self.fp

    def to_dict(self) -> dict:
        return {"tp": self.tp, "fn": self.fn, "tn": self.tn, "fp": self.fp}


def confusion_from_scores(
    scores: Sequence[float], labels: Sequence[int], theta: float
) -> ConfusionCounts:
    """Apply the ``score >= theta`` rule and tally the confusion counts."""
    if len(scores) != len(labels):
        raise ValueError("scores and labels must have equal length")
    tp = fn = tn = fp = 0
    for score, label in zip(scores, labels):
        predicted = 1 if score >= theta else 0
        if label == 1:
            if predicted == 1:
                tp += 1
            else:
                fn += 1
        elif label == 0:
            if predicted == 0:
                tn += 1
            else:
                fp += 1
        else:
            raise ValueError(f"label must be 0 or 1, got {label!r}")
    return ConfusionCounts(tp=tp, fn=fn, tn=tn, fp=fp)


def balanced_accuracy(counts: ConfusionCounts) -> float:
    """Mean of true-positive rate and true-negative rate."""
    if counts.positives < 1 or counts.negatives < 1:
        raise DegenerateClassBalance(
            f"need both classes: positives={counts.positives}, negatives={counts.negatives}"
        )
    tpr = counts.tp / counts.positives
    tnr = counts.tn / counts.negatives
    return 0.5 * (tpr + tnr)


def tune_threshold(
    scores: Sequence[float], labels: Sequence[int], grid_step: float = 0.01
) -> tuple[float, float]:
    """Exhaustive grid scan; returns (lowest best theta, best BAcc)."""
    if len(scores) != len(labels):
        raise ValueError("scores and labels must have equal length")
    if len(scores) < 2:
        raise ValueError("need at least two scored pairs")
    if grid_step <= 0 or grid_step > 1:
        raise ValueError("grid_step must be in (0, 1]")
    if not (0 in labels and 1 in labels):
        raise DegenerateClassBalance("threshold tuning needs both classes")
    steps = round(1.0 / grid_step)
    best_theta = 0.0
    best_bacc = -1.0
    for i in range(steps + 1):
        theta = i / steps
        bacc = balanced_accuracy(confusion_from_scores(scores, labels, theta))
        if bacc > best_bacc:
            best_bacc = bacc
            best_theta = theta
    return best_theta, best_bacc

"""Paired bootstrap comparison of two scoring systems.

Each run resamples pair indices with replacement, computes balanced
accuracy for both systems on the resample (each at its own threshold),
and counts runs where system A fails to strictly beat system B.  The
p-value uses the add-one smoothed estimator so it never reaches zero.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Sequence

from ..errors import DegenerateClassBalance
from .metrics import balanced_accuracy, confusion_from_scores

_MAX_REDRAWS = 25


@dataclass(frozen=True)
class BootstrapResult:
    p_value: float
    runs_completed: int
    runs_skipped: int
    a_not_better: int

    def to_dict(self) -> dict:
        return {
            "p_value": self.p_value,
            "runs_completed": self.runs_completed,
            "runs_skipped": self.runs_skipped,
            "a_not_better": self.a_not_better,
        }


def paired_bootstrap(
    scores_a: Sequence[float],
    scores_b: Sequence[float],
    labels: Sequence[int],
    theta_a: float,
    theta_b: float,
    runs: int = 100,
    sample_size: int = 150,
    seed: int = 0,
) -> BootstrapResult:
    """Bootstrap p-value for "A is no better than B" (one-sided).

    Resamples are drawn with replacement, so the corpus may be smaller than
    ``sample_size``.  A resample containing a single class is redrawn a
    bounded number of times, then the run is skipped and counted.
    """
    if not (len(scores_a) == len(scores_b) == len(labels)):
        raise ValueError("scores_a, scores_b, and labels must align")
    if len(labels) < 2:
        raise ValueError("need at least two labeled pairs")
    if runs < 1 or sample_size < 1:
        raise ValueError("runs and sample_size must be >= 1")
    if not (0 in labels and 1 in labels):
        raise DegenerateClassBalance("bootstrap needs both classes in labels")

    rng = random.Random(seed)
    n = len(labels)
    completed = 0
    skipped = 0
    not_better = 0
    for _ in range(runs):
        indices = None
        for _attempt in range(_MAX_REDRAWS):
            candidate = [rng.randrange(n) for _ in range(sample_size)]
            drawn = {labels[i] for i in candidate}
            if drawn == {0, 1}:
                indices = candidate
                break
        if indices is None:
            skipped += 1
            continue
        sub_labels = [labels[i] for i in indices]
        bacc_a = balanced_accuracy(
            confusion_from_scores([scores_a[i] for i in indices], sub_labels, theta_a)
        )
        bacc_b = balanced_accuracy(
            confusion_from_scores([scores_b[i] for i in indices], sub_labels, theta_b)
        )
        if bacc_a <= bacc_b:
            not_better += 1
        completed += 1
    p_value = (not_better + 1) / (completed + 1)
    return BootstrapResult(
        p_value=p_value,
        runs_completed=completed,
        runs_skipped=skipped,
        a_not_better=not_better,
    )

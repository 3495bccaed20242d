"""ROC and precision-recall curves, their areas, and reference AUC values."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import OneClassOnly, ValidationError

__all__ = [
    "Curve",
    "roc_auc",
    "pr_auc",
    "two_score_auc",
    "auc_affine_reference",
    "er_auc_theory",
]


@dataclass(frozen=True, eq=False)
class Curve:
    """Curve points ``(x, y)`` with the score threshold reached at each point.

    For ROC curves ``x`` is the false-positive rate and ``y`` the true-positive
    rate; for PR curves ``x`` is recall and ``y`` precision. The first point
    has threshold ``+inf``.
    """

    x: np.ndarray
    y: np.ndarray
    thresholds: np.ndarray

    def __len__(self):
        return self.x.size

    def thinned(self, max_points: int) -> "Curve":
        """At most ``max_points`` points, always keeping both ends."""
        if self.x.size <= max_points:
            return self
        idx = np.unique(np.linspace(0, self.x.size - 1, max_points).round().astype(int))
        return Curve(self.x[idx], self.y[idx], self.thresholds[idx])


def _sweep(scores, labels):
    scores = np.asarray(scores, dtype=np.float64).ravel()
    labels = np.asarray(labels).ravel().astype(bool)
    if scores.size != labels.size:
        raise ValidationError("scores and labels differ in length")
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise OneClassOnly("need at least one positive and one negative label")
    order = np.argsort(-scores, kind="stable")
    s, y = scores[order], labels[order]
    # one threshold per distinct score: ties move the curve in a single step
    last = np.r_[np.flatnonzero(np.diff(s)), s.size - 1]
    tps = np.cumsum(y)[last]
    fps = last + 1 - tps
    return s[last], tps, fps, n_pos, n_neg


def roc_auc(scores, labels) -> tuple[Curve, float]:
    """ROC curve over all distinct thresholds and its trapezoidal area.

    The area equals the probability that a random positive outscores a
    random negative, with ties counted as one half.
    """
    thr, tps, fps, n_pos, n_neg = _sweep(scores, labels)
    fpr = np.r_[0.0, fps / n_neg]
    tpr = np.r_[0.0, tps / n_pos]
    curve = Curve(fpr, tpr, np.r_[np.inf, thr])
    return curve, float(np.trapezoid(tpr, fpr))


def pr_auc(scores, labels) -> tuple[Curve, float]:
    """Precision-recall curve and its trapezoidal area.

    The curve starts at recall 0 with precision 1.
    """
    thr, tps, fps, n_pos, _ = _sweep(scores, labels)
    recall = np.r_[0.0, tps / n_pos]
    precision = np.r_[1.0, tps / (tps + fps)]
    curve = Curve(recall, precision, np.r_[np.inf, thr])
    return curve, float(np.trapezoid(precision, recall))


def two_score_auc(tpr: float, fpr: float) -> float:
    """Area under the ROC curve with a single knee at ``(fpr, tpr)``."""
    return 0.5 + (tpr - fpr) / 2


def auc_affine_reference(rho: float) -> float:
    """Correlated ER prediction AUC when the two layer densities match."""
    if abs(rho) > 1:
        raise ValidationError("rho must lie in [-1, 1]")
    return (1 + abs(rho)) / 2


def er_auc_theory(p1: float, p2: float, rho: float) -> float:
    """Expected AUC of correlated ER scores when predicting layer 2 from layer 1.

    Affine in ``|rho|``: ``1/2 + |rho|/2 * sqrt(p1 (1 - p1)) *
    (sqrt((1 - p2) / p2) + sqrt(p2 / (1 - p2)))``.
    """
    slope = math.sqrt(p1 * (1 - p1)) * (math.sqrt((1 - p2) / p2) + math.sqrt(p2 / (1 - p2)))
    return 0.5 + abs(rho) / 2 * slope

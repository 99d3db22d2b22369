"""Per-class and aggregate classification metrics for +-1 labels."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError


@dataclass
class MetricsReport:
    """``confusion[i][j]`` counts true class i predicted as j, order (-1, +1)."""

    per_class: dict[int, dict[str, float]]
    accuracy: float
    macro: dict[str, float]
    confusion: list[list[int]]

    def to_dict(self) -> dict:
        return {
            "per_class": {str(k): v for k, v in self.per_class.items()},
            "accuracy": self.accuracy,
            "macro": self.macro,
            "confusion": self.confusion,
        }


def _ratio(num, den) -> float:
    return float(num / den) if den > 0 else 0.0


def confusion_metrics(y_true, y_pred) -> MetricsReport:
    yt = np.asarray(y_true).ravel()
    yp = np.asarray(y_pred).ravel()
    if yt.shape != yp.shape:
        raise InvalidInputError(f"length mismatch: {yt.shape[0]} true vs {yp.shape[0]} predicted")
    for arr in (yt, yp):
        if not np.all((arr == 1) | (arr == -1)):
            raise InvalidInputError("labels must be -1 or +1")
    order = (-1, 1)
    cm = [[int(np.sum((yt == a) & (yp == b))) for b in order] for a in order]
    per_class = {}
    for k, cls in enumerate(order):
        tp = cm[k][k]
        fp = sum(cm[o][k] for o in range(2) if o != k)
        fn = sum(cm[k][o] for o in range(2) if o != k)
        p, r = _ratio(tp, tp + fp), _ratio(tp, tp + fn)
        f1 = _ratio(2 * p * r, p + r)
        per_class[cls] = {"precision": p, "recall": r, "f1": f1, "support": tp + fn}
    n = yt.shape[0]
    acc = _ratio(cm[0][0] + cm[1][1], n)
    macro = {m: float(np.mean([per_class[c][m] for c in order])) for m in ("precision", "recall", "f1")}
    return MetricsReport(per_class, acc, macro, cm)


def score(report: MetricsReport, objective: str) -> float:
    """The grid-search objective: positive-class F1 or accuracy."""
    if objective == "minority_f1":
        return report.per_class[1]["f1"]
    if objective == "accuracy":
        return report.accuracy
    raise InvalidInputError(f"unknown objective {objective!r}")

"""Micro/Macro-F1 for single-label multi-class predictions."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np


@dataclass
class ClassScore:
    label: int
    precision: float
    recall: float
    f1: float
    support: int


@dataclass
class MetricsReport:
    micro_f1: float
    macro_f1: float
    per_class: list[ClassScore]
    n_eval: int
    seed: int | None = None
    variant: str | None = None
    config: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def predict(F: np.ndarray, nodes=None) -> np.ndarray:
    """Hard labels by row argmax (ties to the lowest class index)."""
    F = np.asarray(F)
    if nodes is not None:
        F = F[np.asarray(nodes)]
    return np.argmax(F, axis=1)


def _safe_div(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    return np.divide(a, b, out=np.zeros_like(a), where=b > 0)


def micro_macro_f1(pred, truth, num_classes: int | None = None, **extra) -> MetricsReport:
    """Micro-F1 pools all decisions; Macro-F1 averages per-class F1 over the
    classes that occur in ``truth`` or ``pred``."""
    pred = np.asarray(pred, dtype=np.int64)
    truth = np.asarray(truth, dtype=np.int64)
    if pred.shape != truth.shape:
        raise ValueError(f"length mismatch: {pred.size} predictions vs {truth.size} labels")
    if (pred < 0).any() or (truth < 0).any():
        raise ValueError("class ids must be non-negative")
    k = max(num_classes or 0, int(pred.max(initial=-1)) + 1, int(truth.max(initial=-1)) + 1)
    tp = np.bincount(truth[pred == truth], minlength=k)
    n_pred = np.bincount(pred, minlength=k)
    n_true = np.bincount(truth, minlength=k)
    precision = _safe_div(tp, n_pred)
    recall = _safe_div(tp, n_true)
    f1 = _safe_div(2 * tp, n_pred + n_true)

    micro = float(tp.sum() / truth.size) if truth.size else 0.0
    present = (n_pred + n_true) > 0
    macro = float(f1[present].mean()) if present.any() else 0.0
    per_class = [ClassScore(c, float(precision[c]), float(recall[c]), float(f1[c]), int(n_true[c]))
                 for c in range(k)]
    return MetricsReport(micro, macro, per_class, int(truth.size), **extra)

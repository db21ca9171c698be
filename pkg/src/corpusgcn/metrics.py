"""Classification metrics for document-node predictions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class EvalResult:
    accuracy: float
    macro_f1: float
    weighted_f1: float
    confusion: np.ndarray  # rows = gold label, cols = predicted label
    per_class_f1: dict[int, float]

    def as_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "macro_f1": self.macro_f1,
            "weighted_f1": self.weighted_f1,
            "per_class_f1": {str(k): v for k, v in self.per_class_f1.items()},
            "confusion": self.confusion.tolist(),
        }


def evaluate(pred, gold, n_labels: int | None = None) -> EvalResult:
    """Accuracy, macro / support-weighted F1, and the confusion matrix.

    Macro F1 averages per-class F1 over the classes present in the gold
    labels or the predictions; classes appearing in neither are left out
    of the denominator.  A class with zero precision+recall gets F1 = 0.
    Weighted F1 weights each class by its gold support.
    """
    gold = np.asarray(gold, dtype=np.int64)
    pred = np.asarray(pred, dtype=np.int64)
    if gold.shape != pred.shape or gold.ndim != 1:
        raise ValueError("gold and pred must be 1-d arrays of equal length")
    if gold.size == 0:
        raise ValueError("cannot evaluate zero examples")
    if n_labels is None:
        n_labels = int(max(gold.max(), pred.max())) + 1
    if gold.min() < 0 or pred.min() < 0 or max(gold.max(), pred.max()) >= n_labels:
        raise ValueError(f"labels out of range for n_labels={n_labels}")

    confusion = np.zeros((n_labels, n_labels), dtype=np.int64)
    np.add.at(confusion, (gold, pred), 1)

    accuracy = float(np.trace(confusion)) / gold.size

    tp = np.diag(confusion).astype(np.float64)
    support = confusion.sum(axis=1).astype(np.float64)  # gold count per class
    predicted = confusion.sum(axis=0).astype(np.float64)

    per_class: dict[int, float] = {}
    for c in range(n_labels):
        if support[c] == 0.0 and predicted[c] == 0.0:
            continue
        denom = support[c] + predicted[c]  # == 2TP + FP + FN
        per_class[c] = float(2.0 * tp[c] / denom) if denom > 0.0 else 0.0

    macro_f1 = sum(per_class.values()) / len(per_class) if per_class else 0.0
    total = support.sum()
    weighted_f1 = float(
        sum(per_class[c] * support[c] for c in per_class) / total
    )
    return EvalResult(accuracy, macro_f1, weighted_f1, confusion, per_class)

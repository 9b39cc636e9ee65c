"""Evaluation metrics: per-task accuracy, class-weighted murmur accuracy,
and per-class precision for the binary zero-shot datasets.

All counting is exact integer arithmetic; division happens once at the
end, so results are reproducible bit for bit.
"""

from __future__ import annotations

from ..errors import DataError, UsageError
from .logs import PredictionLog

# Challenge-style class weights: missed Present murmurs cost the most.
DEFAULT_WACC_WEIGHTS = {"Present": 5, "Unknown": 3, "Absent": 1}


def accuracy_by_task(log: PredictionLog) -> dict[str, float]:
    """Fraction correct per task; tasks with zero entries are omitted."""
    if not log.entries:
        raise UsageError("accuracy_by_task needs a non-empty log")
    correct: dict[str, int] = {}
    total: dict[str, int] = {}
    for e in log.entries:
        total[e.task_id] = total.get(e.task_id, 0) + 1
        correct[e.task_id] = correct.get(e.task_id, 0) + (e.predicted == e.gold)
    return {t: correct[t] / total[t] for t in sorted(total)}


def weighted_accuracy(log: PredictionLog, weights: dict[str, float] | None = None) -> float:
    """sum_c w_c * correct_c / sum_c w_c * total_c over presence entries."""
    weights = DEFAULT_WACC_WEIGHTS if weights is None else weights
    entries = log.for_task("murmur_presence")
    correct = {c: 0 for c in weights}
    total = {c: 0 for c in weights}
    for e in entries:
        if e.gold not in weights:
            raise DataError(
                f"gold label {e.gold!r} is not a murmur class {sorted(weights)}"
            )
        total[e.gold] += 1
        correct[e.gold] += e.predicted == e.gold
    denominator = sum(weights[c] * total[c] for c in weights)
    if denominator == 0:
        raise DataError("weighted_accuracy: no presence entries (zero denominator)")
    numerator = sum(weights[c] * correct[c] for c in weights)
    return numerator / denominator


def class_precision(predictions: list[tuple[str, str]], cls: str) -> float | None:
    """TP / (TP + FP) for `cls`; None when `cls` was never predicted."""
    true_positive = sum(1 for gold, pred in predictions if pred == cls and gold == cls)
    predicted = sum(1 for _, pred in predictions if pred == cls)
    if predicted == 0:
        return None
    return true_positive / predicted


def presence_to_binary(label: str) -> str:
    """Zero-shot mapping: Present/Unknown count as abnormal."""
    if label not in ("Present", "Absent", "Unknown"):
        raise DataError(f"not a murmur class: {label!r}")
    return "normal" if label == "Absent" else "abnormal"

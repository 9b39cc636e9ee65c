from .logs import PredictionEntry, PredictionLog, read_log, write_log
from .metrics import (
    DEFAULT_WACC_WEIGHTS,
    accuracy_by_task,
    class_precision,
    presence_to_binary,
    weighted_accuracy,
)
from .report import (
    EvalReport,
    REFERENCE_REPORTS,
    parse_report,
    render_report,
)

__all__ = [
    "PredictionEntry",
    "PredictionLog",
    "read_log",
    "write_log",
    "DEFAULT_WACC_WEIGHTS",
    "accuracy_by_task",
    "class_precision",
    "presence_to_binary",
    "weighted_accuracy",
    "EvalReport",
    "REFERENCE_REPORTS",
    "parse_report",
    "render_report",
]

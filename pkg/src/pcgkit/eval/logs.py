"""Prediction logs: one entry per evaluated item, plus run identity."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from ..errors import DataError
from ..util import read_jsonl, write_jsonl


@dataclass(frozen=True)
class PredictionEntry:
    item_ref: str
    task_id: str
    gold: str
    predicted: str
    scores: tuple[float, ...] = ()

    def as_dict(self) -> dict:
        return {
            "item_ref": self.item_ref,
            "task_id": self.task_id,
            "gold": self.gold,
            "predicted": self.predicted,
            "scores": list(self.scores),
        }


@dataclass
class PredictionLog:
    model_tag: str
    config_hash: str
    mode: str  # "NS" or "WS"
    entries: list[PredictionEntry] = field(default_factory=list)

    def __post_init__(self):
        if self.mode not in ("NS", "WS"):
            raise DataError(f"segmentation mode must be NS or WS, got {self.mode!r}")

    def add(self, entry: PredictionEntry) -> None:
        self.entries.append(entry)

    def for_task(self, task_id: str) -> list[PredictionEntry]:
        return [e for e in self.entries if e.task_id == task_id]


def write_log(path: str | Path, log: PredictionLog) -> None:
    header = {
        "record": "header",
        "model_tag": log.model_tag,
        "config_hash": log.config_hash,
        "mode": log.mode,
    }
    rows = [header] + [dict(e.as_dict(), record="entry") for e in log.entries]
    write_jsonl(path, rows)


def read_log(path: str | Path) -> PredictionLog:
    rows = read_jsonl(path)
    if not rows or rows[0].get("record") != "header":
        raise DataError(f"{path}: missing prediction-log header record")
    header = rows[0]
    log = PredictionLog(
        model_tag=header["model_tag"],
        config_hash=header["config_hash"],
        mode=header["mode"],
    )
    for row in rows[1:]:
        log.add(
            PredictionEntry(
                item_ref=row["item_ref"],
                task_id=row["task_id"],
                gold=row["gold"],
                predicted=row["predicted"],
                scores=tuple(row.get("scores", ())),
            )
        )
    return log

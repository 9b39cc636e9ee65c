"""Report shapes and rendering.

Three tables: systolic features, diastolic features plus weighted
murmur accuracy, and zero-shot normal/abnormal results. Published
baseline numbers ship as stored reference rows marked
"reference, not reproduced"; they are never recomputed here. Percentages
render with one decimal place while the machine-readable form keeps full
precision and round-trips exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .. import ARTIFACT_VERSION

SYS_TASKS = ("sys_timing", "sys_shape", "sys_grading", "sys_pitch", "sys_quality")
DIA_TASKS = ("dia_timing", "dia_shape", "dia_grading", "dia_pitch", "dia_quality")
FEATURE_COLUMNS = ("Timing", "Shape", "Grading", "Pitch", "Quality")
UNDEFINED = "—"


@dataclass(frozen=True)
class EvalReport:
    system: str
    mode: str
    dataset: str
    per_task_accuracy: dict = field(default_factory=dict)
    counts: dict = field(default_factory=dict)
    weighted_accuracy: float | None = None
    precision: dict = field(default_factory=dict)
    reference: bool = False

    def as_dict(self) -> dict:
        return {
            "system": self.system,
            "mode": self.mode,
            "dataset": self.dataset,
            "per_task_accuracy": dict(self.per_task_accuracy),
            "counts": dict(self.counts),
            "weighted_accuracy": self.weighted_accuracy,
            "precision": dict(self.precision),
            "reference": self.reference,
        }

    @staticmethod
    def from_dict(d: dict) -> "EvalReport":
        return EvalReport(
            system=d["system"],
            mode=d["mode"],
            dataset=d["dataset"],
            per_task_accuracy=dict(d["per_task_accuracy"]),
            counts={k: int(v) for k, v in d["counts"].items()},
            weighted_accuracy=d["weighted_accuracy"],
            precision=dict(d["precision"]),
            reference=bool(d["reference"]),
        )


def _ref(system, mode, dataset, **kw):
    return EvalReport(system=system, mode=mode, dataset=dataset, reference=True, **kw)


# Published results kept for side-by-side comparison; not reproduced by
# this package (they come from 8.2B-parameter pretrained systems on the
# full corpora).
REFERENCE_REPORTS: tuple[EvalReport, ...] = (
    _ref(
        "Deep CardioSound", "-", "circor_test",
        per_task_accuracy={
            "sys_timing": 0.966, "sys_shape": 0.963, "sys_grading": 0.966,
            "sys_pitch": 0.966, "sys_quality": 0.965,
        },
    ),
    _ref("M2D+AST", "-", "circor_test", weighted_accuracy=0.832),
    _ref(
        "Qwen2-Audio-LoRA", "NS", "circor_test",
        per_task_accuracy={
            "sys_timing": 1.0, "sys_shape": 0.997, "sys_grading": 0.334,
            "sys_pitch": 0.997, "sys_quality": 0.992,
            "dia_timing": 1.0, "dia_shape": 0.999, "dia_grading": 0.395,
            "dia_pitch": 1.0, "dia_quality": 1.0,
        },
        weighted_accuracy=0.637,
    ),
    _ref(
        "Qwen2-Audio-LoRA", "WS", "circor_test",
        per_task_accuracy={
            "sys_timing": 1.0, "sys_shape": 1.0, "sys_grading": 0.334,
            "sys_pitch": 1.0, "sys_quality": 1.0,
            "dia_timing": 1.0, "dia_shape": 1.0, "dia_grading": 0.427,
            "dia_pitch": 1.0, "dia_quality": 1.0,
        },
        weighted_accuracy=0.756,
    ),
    _ref("Qwen2-Audio-LoRA", "NS", "cinc2016",
         per_task_accuracy={"binary_presence": 0.1963}),
    _ref("Qwen2-Audio-LoRA", "WS", "cinc2016",
         per_task_accuracy={"binary_presence": 0.6633}),
    _ref("Qwen2-Audio-LoRA", "NS", "pascal_a",
         precision={"normal": 0.487, "abnormal": 0.0}),
    _ref("Qwen2-Audio-LoRA", "WS", "pascal_a",
         precision={"normal": 0.483, "abnormal": 1.0}),
    _ref("Qwen2-Audio-LoRA", "NS", "pascal_b",
         precision={"normal": 0.737, "abnormal": 0.40}),
    _ref("Qwen2-Audio-LoRA", "WS", "pascal_b",
         precision={"normal": 0.753, "abnormal": 0.625}),
)


def _pct(value: float | None) -> str:
    return UNDEFINED if value is None else f"{100.0 * value:.1f}"


def _row_name(report: EvalReport) -> str:
    suffix = " [reference, not reproduced]" if report.reference else ""
    return f"{report.system}{suffix}"


def _feature_table(rows: list[EvalReport], tasks, title: str, with_wacc: bool) -> list[str]:
    columns = list(FEATURE_COLUMNS) + (["Murmur W.acc"] if with_wacc else [])
    header = f"{'System':46s} {'Mode':4s} " + " ".join(f"{c:>12s}" for c in columns)
    lines = [title, "=" * len(header), header, "-" * len(header)]
    for r in rows:
        cells = [_pct(r.per_task_accuracy.get(t)) for t in tasks]
        if with_wacc:
            cells.append(_pct(r.weighted_accuracy))
        if all(c == UNDEFINED for c in cells):
            continue
        lines.append(
            f"{_row_name(r):46s} {r.mode:4s} " + " ".join(f"{c:>12s}" for c in cells)
        )
    lines.append("")
    return lines


def _zeroshot_table(rows: list[EvalReport], title: str) -> list[str]:
    header = (
        f"{'System':46s} {'Mode':4s} {'CinC2016 Acc':>14s} "
        f"{'Pascal A N/A Prec':>20s} {'Pascal B N/A Prec':>20s}"
    )
    lines = [title, "=" * len(header), header, "-" * len(header)]
    by_key: dict[tuple[str, str, bool], dict[str, EvalReport]] = {}
    for r in rows:
        by_key.setdefault((r.system, r.mode, r.reference), {})[r.dataset] = r
    for (system, mode, reference), group in by_key.items():
        if not any(d in group for d in ("cinc2016", "pascal_a", "pascal_b")):
            continue
        cinc = group.get("cinc2016")
        acc = _pct(cinc.per_task_accuracy.get("binary_presence")) if cinc else UNDEFINED
        cells = [f"{acc:>14s}"]
        for dataset in ("pascal_a", "pascal_b"):
            r = group.get(dataset)
            if r is None:
                cells.append(f"{UNDEFINED:>20s}")
            else:
                pair = f"{_pct(r.precision.get('normal'))} / {_pct(r.precision.get('abnormal'))}"
                cells.append(f"{pair:>20s}")
        name = system + (" [reference, not reproduced]" if reference else "")
        lines.append(f"{name:46s} {mode:4s} " + " ".join(cells))
    lines.append("")
    return lines


def render_report(
    reports: list[EvalReport],
    reference_rows: tuple[EvalReport, ...] = REFERENCE_REPORTS,
) -> tuple[str, dict]:
    """Returns (plain-text tables, machine-readable document)."""
    all_rows = list(reference_rows) + list(reports)
    circor_rows = [r for r in all_rows if r.dataset == "circor_test"]
    lines: list[str] = []
    lines += _feature_table(
        circor_rows, SYS_TASKS, "Systolic murmur features (% accuracy)", with_wacc=False
    )
    lines += _feature_table(
        circor_rows, DIA_TASKS,
        "Diastolic murmur features (% accuracy) and weighted murmur accuracy",
        with_wacc=True,
    )
    lines += _zeroshot_table(all_rows, "Zero-shot normal/abnormal classification")
    machine = {
        "artifact": ARTIFACT_VERSION,
        "reports": [r.as_dict() for r in reports],
        "reference_reports": [r.as_dict() for r in reference_rows],
    }
    return "\n".join(lines), machine


def parse_report(machine: dict) -> list[EvalReport]:
    """Inverse of render_report for the machine-readable document."""
    return [EvalReport.from_dict(d) for d in machine["reports"]]

"""The 11 classification tasks: label vocabularies and question pools.

One presence task plus five murmur-feature tasks per phase. Label
vocabularies follow the dataset dictionary; the systolic grading
vocabulary can be extended with higher grades via `with_labels` if a
data dictionary requires it. Question paraphrase pools are fixed,
versioned text: three phrasings per task, one drawn per item.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from ..errors import DataError

TASK_IDS = (
    "murmur_presence",
    "sys_timing",
    "sys_shape",
    "sys_grading",
    "sys_pitch",
    "sys_quality",
    "dia_timing",
    "dia_shape",
    "dia_grading",
    "dia_pitch",
    "dia_quality",
)

PARAPHRASE_VERSION = "questions-v1"


@dataclass(frozen=True)
class LabelVocabulary:
    task_id: str
    labels: tuple[str, ...]

    def __post_init__(self):
        if self.task_id not in TASK_IDS:
            raise DataError(f"unknown task id {self.task_id!r}")
        if len(set(self.labels)) != len(self.labels):
            raise DataError(f"duplicate labels in vocabulary for {self.task_id}")
        if len(self.labels) < 2:
            raise DataError(f"vocabulary for {self.task_id} needs at least 2 labels")

    def with_labels(self, extra: tuple[str, ...]) -> "LabelVocabulary":
        return replace(self, labels=self.labels + tuple(l for l in extra if l not in self.labels))


_SHAPES = ("Crescendo", "Decrescendo", "Diamond", "Plateau")
_GRADES = ("I/VI", "II/VI", "III/VI")
_PITCHES = ("Low", "Medium", "High")
_QUALITIES = ("Blowing", "Harsh", "Musical")

DEFAULT_VOCABULARIES: dict[str, LabelVocabulary] = {
    "murmur_presence": LabelVocabulary("murmur_presence", ("Present", "Absent", "Unknown")),
    "sys_timing": LabelVocabulary(
        "sys_timing", ("Early-systolic", "Mid-systolic", "Late-systolic", "Holosystolic")
    ),
    "sys_shape": LabelVocabulary("sys_shape", _SHAPES),
    "sys_grading": LabelVocabulary("sys_grading", _GRADES),
    "sys_pitch": LabelVocabulary("sys_pitch", _PITCHES),
    "sys_quality": LabelVocabulary("sys_quality", _QUALITIES),
    "dia_timing": LabelVocabulary(
        "dia_timing", ("Early-diastolic", "Mid-diastolic", "Late-diastolic", "Holodiastolic")
    ),
    "dia_shape": LabelVocabulary("dia_shape", _SHAPES),
    "dia_grading": LabelVocabulary("dia_grading", _GRADES),
    "dia_pitch": LabelVocabulary("dia_pitch", _PITCHES),
    "dia_quality": LabelVocabulary("dia_quality", _QUALITIES),
}

PARAPHRASES: dict[str, tuple[str, str, str]] = {
    "murmur_presence": (
        "Is a heart murmur present in this recording?",
        "Does this phonocardiogram contain a murmur?",
        "Listening to this heart sound, is there a murmur?",
    ),
    "sys_timing": (
        "What is the timing of the systolic murmur?",
        "When during systole does the murmur occur?",
        "How is the systolic murmur timed within the cardiac cycle?",
    ),
    "sys_shape": (
        "What is the shape of the systolic murmur?",
        "Which amplitude contour does the systolic murmur follow?",
        "How would you describe the systolic murmur's envelope?",
    ),
    "sys_grading": (
        "What is the grading of the systolic murmur?",
        "How intense is the systolic murmur on the grading scale?",
        "Which grade best matches the systolic murmur's loudness?",
    ),
    "sys_pitch": (
        "What is the pitch of the systolic murmur?",
        "How high or low is the systolic murmur in pitch?",
        "Which pitch category fits the systolic murmur?",
    ),
    "sys_quality": (
        "What is the quality of the systolic murmur?",
        "Which sound quality best describes the systolic murmur?",
        "How does the systolic murmur sound in character?",
    ),
    "dia_timing": (
        "What is the timing of the diastolic murmur?",
        "When during diastole does the murmur occur?",
        "How is the diastolic murmur timed within the cardiac cycle?",
    ),
    "dia_shape": (
        "What is the shape of the diastolic murmur?",
        "Which amplitude contour does the diastolic murmur follow?",
        "How would you describe the diastolic murmur's envelope?",
    ),
    "dia_grading": (
        "What is the grading of the diastolic murmur?",
        "How intense is the diastolic murmur on the grading scale?",
        "Which grade best matches the diastolic murmur's loudness?",
    ),
    "dia_pitch": (
        "What is the pitch of the diastolic murmur?",
        "How high or low is the diastolic murmur in pitch?",
        "Which pitch category fits the diastolic murmur?",
    ),
    "dia_quality": (
        "What is the quality of the diastolic murmur?",
        "Which sound quality best describes the diastolic murmur?",
        "How does the diastolic murmur sound in character?",
    ),
}


def task_phase(task_id: str) -> str | None:
    if task_id.startswith("sys_"):
        return "systolic"
    if task_id.startswith("dia_"):
        return "diastolic"
    return None


def task_feature(task_id: str) -> str | None:
    phase = task_phase(task_id)
    return task_id.split("_", 1)[1] if phase else None

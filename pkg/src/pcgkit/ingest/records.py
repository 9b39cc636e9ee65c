"""Core record types shared by the loaders and the rest of the pipeline.

A recording is one auscultation capture; segment intervals carry expert
(or generator ground-truth) heartbeat timings; the murmur annotation is
patient-level and replicated onto each of that patient's recordings,
with a per-recording flag saying whether the murmur is audible at the
recorded site.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import DataError

SITES = ("aortic", "pulmonic", "tricuspid", "mitral", "unknown")
STATES = ("S1", "systole", "S2", "diastole", "unlabeled")
MURMUR_CLASSES = ("Present", "Absent", "Unknown")
FEATURE_NAMES = ("timing", "shape", "grading", "pitch", "quality")

# Which interval states count as "heartbeat occurrence" when rasterizing.
HEARTBEAT_STATES = {
    "broad": frozenset({"S1", "systole", "S2", "diastole"}),
    "strict": frozenset({"S1", "S2"}),
}


@dataclass(frozen=True)
class PCGRecording:
    """One phonocardiogram: mono waveform in [-1, 1] plus identity."""

    patient_id: str
    site: str
    samples: np.ndarray
    sample_rate: int
    recording_id: str = ""

    def __post_init__(self):
        if self.site not in SITES:
            raise DataError(f"unknown auscultation site {self.site!r}")
        if self.sample_rate <= 0:
            raise DataError(f"sample_rate must be positive, got {self.sample_rate}")
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1 or samples.size == 0:
            raise DataError("samples must be a non-empty 1-D sequence")
        object.__setattr__(self, "samples", samples)
        if not self.recording_id:
            object.__setattr__(self, "recording_id", f"{self.patient_id}_{self.site}")

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate

    def with_samples(self, samples: np.ndarray) -> "PCGRecording":
        return replace(self, samples=np.asarray(samples, dtype=np.float64))


@dataclass(frozen=True)
class SegmentIntervals:
    """Sorted, non-overlapping (onset_s, offset_s, state) intervals."""

    intervals: tuple[tuple[float, float, str], ...] = ()

    def __post_init__(self):
        norm = tuple(
            (float(on), float(off), str(state)) for on, off, state in self.intervals
        )
        prev_off = -np.inf
        for on, off, state in norm:
            if state not in STATES:
                raise DataError(f"unknown interval state {state!r}")
            if not on < off:
                raise DataError(f"interval onset {on} must precede offset {off}")
            if on < prev_off:
                raise DataError("intervals must be sorted and non-overlapping")
            prev_off = off
        object.__setattr__(self, "intervals", norm)

    def __len__(self) -> int:
        return len(self.intervals)

    def __iter__(self):
        return iter(self.intervals)

    @property
    def total_duration_s(self) -> float:
        return sum(off - on for on, off, _ in self.intervals)

    def check_within(self, duration_s: float, tol_s: float = 1e-9) -> None:
        for on, off, _ in self.intervals:
            if on < -tol_s or off > duration_s + tol_s:
                raise DataError(
                    f"interval [{on}, {off}) outside recording of {duration_s:.3f} s"
                )


@dataclass(frozen=True)
class PhaseFeatures:
    """Expert labels for one murmur phase; every field is optional."""

    timing: str | None = None
    shape: str | None = None
    grading: str | None = None
    pitch: str | None = None
    quality: str | None = None

    def get(self, feature: str) -> str | None:
        if feature not in FEATURE_NAMES:
            raise DataError(f"unknown murmur feature {feature!r}")
        return getattr(self, feature)

    @property
    def empty(self) -> bool:
        return all(self.get(name) is None for name in FEATURE_NAMES)

    def as_dict(self) -> dict[str, str]:
        return {n: v for n in FEATURE_NAMES if (v := self.get(n)) is not None}


@dataclass(frozen=True)
class MurmurAnnotation:
    """Patient-level murmur label with per-phase feature records.

    murmur_audible is per-recording: True when the murmur was marked
    audible at the site this copy of the annotation is attached to.
    """

    murmur_class: str
    systolic: PhaseFeatures = field(default_factory=PhaseFeatures)
    diastolic: PhaseFeatures = field(default_factory=PhaseFeatures)
    murmur_audible: bool = False

    def __post_init__(self):
        if self.murmur_class not in MURMUR_CLASSES:
            raise DataError(f"unknown murmur class {self.murmur_class!r}")
        if self.murmur_class == "Absent" and not (
            self.systolic.empty and self.diastolic.empty
        ):
            raise DataError("Absent murmur must have empty phase feature records")

    def phase(self, name: str) -> PhaseFeatures:
        if name == "systolic":
            return self.systolic
        if name == "diastolic":
            return self.diastolic
        raise DataError(f"unknown murmur phase {name!r}")

    def for_recording(self, audible: bool) -> "MurmurAnnotation":
        return replace(self, murmur_audible=audible)

"""Loader for the CirCor DigiScope distribution layout.

Expected files under the root directory:

* ``<patient>_<SITE>.wav``  one recording per auscultation site
* ``<patient>_<SITE>.tsv``  rows ``onset<TAB>offset<TAB>code`` with codes
  0=unlabeled, 1=S1, 2=systole, 3=S2, 4=diastole
* ``<patient>.txt``         patient metadata: an optional header line
  ``<patient> <n_recordings> <rate>`` followed by ``#Key: Value`` lines

The murmur annotation is patient-level; it is replicated onto every
recording of the patient with ``murmur_audible`` set from the
``#Murmur locations`` field.
"""

from __future__ import annotations

import logging
from pathlib import Path

from ..errors import DataError
from .audio_io import read_wav
from .records import (
    FEATURE_NAMES,
    MURMUR_CLASSES,
    MurmurAnnotation,
    PCGRecording,
    PhaseFeatures,
    SegmentIntervals,
)

log = logging.getLogger(__name__)

SITE_CODES = {"AV": "aortic", "PV": "pulmonic", "TV": "tricuspid", "MV": "mitral"}
STATE_CODES = {0: "unlabeled", 1: "S1", 2: "systole", 3: "S2", 4: "diastole"}

_MISSING = {"", "nan", "na", "none", "null"}


def _clean(value: str) -> str | None:
    return None if value.strip().lower() in _MISSING else value.strip()


def parse_patient_metadata(path: Path) -> dict[str, str]:
    """Parse one ``<patient>.txt`` into a key->value mapping.

    Structurally broken lines raise; unknown keys are kept verbatim so
    callers can ignore what they do not need.
    """
    fields: dict[str, str] = {}
    lines = path.read_text(encoding="utf-8").splitlines()
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            if ":" not in line:
                raise DataError(f"{path}:{lineno}: metadata line without ':': {raw!r}")
            key, _, value = line[1:].partition(":")
            fields[key.strip()] = value.strip()
        elif lineno == 1:
            parts = line.split()
            if len(parts) != 3 or not parts[1].isdigit() or not parts[2].isdigit():
                raise DataError(f"{path}:{lineno}: malformed header line: {raw!r}")
            fields["_header_id"] = parts[0]
            fields["_header_rate"] = parts[2]
        else:
            raise DataError(f"{path}:{lineno}: unexpected non-metadata line: {raw!r}")
    return fields


def _phase_features(fields: dict[str, str], phase: str) -> PhaseFeatures:
    prefix = f"{phase.capitalize()} murmur"
    values = {}
    for name in FEATURE_NAMES:
        values[name] = _clean(fields.get(f"{prefix} {name}", ""))
    return PhaseFeatures(**values)


def patient_annotation(fields: dict[str, str]) -> tuple[MurmurAnnotation, set[str]]:
    """Build the patient-level annotation plus the set of audible site codes."""
    murmur_class = _clean(fields.get("Murmur", "")) or "Unknown"
    if murmur_class not in MURMUR_CLASSES:
        log.warning("unparseable murmur class %r, defaulting to Unknown", murmur_class)
        murmur_class = "Unknown"
    if murmur_class != "Present":
        return MurmurAnnotation(murmur_class), set()
    systolic = _phase_features(fields, "systolic")
    diastolic = _phase_features(fields, "diastolic")
    locations = _clean(fields.get("Murmur locations", ""))
    audible = set(locations.split("+")) if locations else set(SITE_CODES)
    return MurmurAnnotation("Present", systolic=systolic, diastolic=diastolic), audible


def read_segmentation_tsv(path: Path) -> SegmentIntervals:
    intervals = []
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise DataError(f"{path}:{lineno}: expected 'onset offset code', got {raw!r}")
        try:
            onset, offset, code = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError as exc:
            raise DataError(f"{path}:{lineno}: {exc}") from exc
        if code not in STATE_CODES:
            raise DataError(f"{path}:{lineno}: unknown segmentation code {code}")
        intervals.append((onset, offset, STATE_CODES[code]))
    return SegmentIntervals(tuple(intervals))


def load_circor(
    root_path: str | Path,
) -> list[tuple[PCGRecording, SegmentIntervals, MurmurAnnotation]]:
    """Load every ``<patient>_<SITE>.wav`` under the root with its annotations."""
    root = Path(root_path)
    if not root.is_dir():
        raise DataError(f"CirCor root {root} is not a directory")

    annotations: dict[str, tuple[MurmurAnnotation, set[str]]] = {}
    out = []
    for wav_path in sorted(root.glob("*.wav")):
        stem = wav_path.stem
        patient_id, _, site_code = stem.rpartition("_")
        if not patient_id:
            log.warning("skipping %s: name does not match <patient>_<SITE>.wav", wav_path)
            continue
        site = SITE_CODES.get(site_code, "unknown")

        if patient_id not in annotations:
            meta_path = root / f"{patient_id}.txt"
            if not meta_path.exists():
                raise DataError(f"missing patient metadata file {meta_path}")
            annotations[patient_id] = patient_annotation(parse_patient_metadata(meta_path))
        annotation, audible_sites = annotations[patient_id]

        rate, samples = read_wav(wav_path)
        recording = PCGRecording(
            patient_id=patient_id,
            site=site,
            samples=samples,
            sample_rate=rate,
            recording_id=stem,
        )

        tsv_path = wav_path.with_suffix(".tsv")
        if tsv_path.exists():
            segments = read_segmentation_tsv(tsv_path)
            segments.check_within(recording.duration_s, tol_s=1.0 / rate)
        else:
            log.warning("no segmentation table for %s; loading empty intervals", stem)
            segments = SegmentIntervals()

        out.append(
            (recording, segments, annotation.for_recording(site_code in audible_sites))
        )
    return out

"""Loaders for the zero-shot normal/abnormal benchmark datasets.

Two on-disk conventions are supported:

* ``cinc2016``: subset folders ``training-a`` .. ``training-f``, each with
  a ``REFERENCE.csv`` mapping record name to 1 (abnormal) or -1 (normal).
* ``pascal_a`` / ``pascal_b``: one folder per class; folders whose name
  contains "murmur" map to abnormal and "normal" to normal, any other
  folder is ignored.
"""

from __future__ import annotations

import logging
from pathlib import Path

from ..errors import DataError
from .audio_io import read_wav
from .records import PCGRecording

log = logging.getLogger(__name__)

BINARY_KINDS = ("cinc2016", "pascal_a", "pascal_b")


def _load_recording(wav_path: Path) -> PCGRecording:
    rate, samples = read_wav(wav_path)
    return PCGRecording(
        patient_id=wav_path.stem,
        site="unknown",
        samples=samples,
        sample_rate=rate,
        recording_id=wav_path.stem,
    )


def _load_cinc2016(root: Path) -> list[tuple[PCGRecording, str]]:
    subsets = sorted(p for p in root.glob("training-*") if p.is_dir())
    if not subsets:
        raise DataError(f"{root}: no training-* subset directories found")
    out = []
    missing = 0
    for subset in subsets:
        reference = subset / "REFERENCE.csv"
        if not reference.exists():
            raise DataError(f"{reference} is missing")
        for lineno, raw in enumerate(reference.read_text().splitlines(), 1):
            line = raw.strip()
            if not line:
                continue
            try:
                name, label_str = (part.strip() for part in line.split(","))
                label_num = int(label_str)
            except ValueError as exc:
                raise DataError(f"{reference}:{lineno}: {exc}") from exc
            if label_num not in (-1, 1):
                raise DataError(f"{reference}:{lineno}: label must be 1 or -1")
            wav_path = subset / f"{name}.wav"
            if not wav_path.exists():
                missing += 1
                log.warning("%s listed in %s but audio missing; skipped", name, reference)
                continue
            out.append((_load_recording(wav_path), "abnormal" if label_num == 1 else "normal"))
    if missing:
        log.warning("cinc2016: skipped %d records with missing audio", missing)
    return out


def _load_pascal(root: Path) -> list[tuple[PCGRecording, str]]:
    out = []
    for folder in sorted(p for p in root.iterdir() if p.is_dir()):
        name = folder.name.lower()
        if "murmur" in name:
            label = "abnormal"
        elif "normal" in name:
            label = "normal"
        else:
            log.info("ignoring non-class folder %s", folder)
            continue
        for wav_path in sorted(folder.glob("*.wav")):
            out.append((_load_recording(wav_path), label))
    return out


def load_binary_dataset(
    root_path: str | Path, kind: str
) -> list[tuple[PCGRecording, str]]:
    """Load (recording, label) pairs with label in {"normal", "abnormal"}."""
    root = Path(root_path)
    if not root.is_dir():
        raise DataError(f"dataset root {root} is not a directory")
    if kind == "cinc2016":
        return _load_cinc2016(root)
    if kind in ("pascal_a", "pascal_b"):
        return _load_pascal(root)
    raise DataError(f"unknown binary dataset kind {kind!r} (expected one of {BINARY_KINDS})")

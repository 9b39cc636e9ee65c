"""Multiple-choice item construction and dataset assembly.

Every item has exactly six options. Small vocabularies are padded by
cycling duplicates of the incorrect labels (the gold label stays unique
as a correct string); large vocabularies are cut to six by a seeded
shuffle that retains the gold. The per-item generator is derived from
(seed, patient, recording, task) so parallel construction order cannot
change the output, and the final option shuffle puts the gold index
uniformly on 0..5.

Inclusion policy: the presence question is built for every recording
(including Unknown-class patients); each feature question is built only
when the murmur is audible in the recording and that feature is
annotated for the phase.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import DataError, UsageError
from ..ingest.records import MurmurAnnotation, PCGRecording
from ..util import derive_seed, read_jsonl, write_jsonl
from .split import SplitManifest
from .vocab import (
    DEFAULT_VOCABULARIES,
    PARAPHRASES,
    PARAPHRASE_VERSION,
    TASK_IDS,
    task_feature,
    task_phase,
)

N_OPTIONS = 6


@dataclass(frozen=True)
class MCItem:
    task_id: str
    recording_ref: str
    question: str
    options: tuple[str, ...]
    gold_index: int
    paraphrase_id: int
    rng_seed: int

    def __post_init__(self):
        if len(self.options) != N_OPTIONS:
            raise UsageError(f"items must carry exactly {N_OPTIONS} options")
        if not 0 <= self.gold_index < N_OPTIONS:
            raise UsageError(f"gold_index {self.gold_index} out of range")

    @property
    def gold_label(self) -> str:
        return self.options[self.gold_index]

    def as_dict(self) -> dict:
        return {
            "task_id": self.task_id,
            "recording_ref": self.recording_ref,
            "question": self.question,
            "options": list(self.options),
            "gold_index": self.gold_index,
            "paraphrase_id": self.paraphrase_id,
            "rng_seed": self.rng_seed,
        }

    @staticmethod
    def from_dict(d: dict) -> "MCItem":
        return MCItem(
            task_id=d["task_id"],
            recording_ref=d["recording_ref"],
            question=d["question"],
            options=tuple(d["options"]),
            gold_index=int(d["gold_index"]),
            paraphrase_id=int(d["paraphrase_id"]),
            rng_seed=int(d["rng_seed"]),
        )


def gold_label_for_task(annotation: MurmurAnnotation, task_id: str) -> str | None:
    """The annotated label, or None when the task does not apply."""
    if task_id == "murmur_presence":
        return annotation.murmur_class
    phase, feature = task_phase(task_id), task_feature(task_id)
    if not annotation.murmur_audible:
        return None
    return annotation.phase(phase).get(feature)


def assemble_options(labels: tuple[str, ...], gold: str, rng: np.random.Generator):
    """Six options containing the gold exactly once (for vocab >= 2)."""
    if len(labels) >= N_OPTIONS:
        order = list(rng.permutation(len(labels)))
        chosen = [labels[i] for i in order[:N_OPTIONS]]
        if gold not in chosen:
            chosen[-1] = gold
        options = chosen
    else:
        incorrect = [label for label in labels if label != gold]
        pads = list(itertools.islice(itertools.cycle(incorrect), N_OPTIONS - len(labels)))
        options = list(labels) + pads
    rng.shuffle(options)
    return tuple(options), options.index(gold)


def build_mc_item(
    recording: PCGRecording,
    annotation: MurmurAnnotation,
    task_id: str,
    rng: np.random.Generator,
    rng_seed: int = 0,
    vocabularies: dict | None = None,
) -> MCItem | None:
    """One item for the task, or None when the task is inapplicable."""
    if task_id not in TASK_IDS:
        raise UsageError(f"unknown task id {task_id!r}")
    vocab = (vocabularies or DEFAULT_VOCABULARIES)[task_id]
    gold = gold_label_for_task(annotation, task_id)
    if gold is None:
        return None
    if gold not in vocab.labels:
        raise DataError(
            f"label {gold!r} for task {task_id} is not in the registered "
            f"vocabulary {vocab.labels}; data dictionary drift"
        )
    paraphrase_id = int(rng.integers(len(PARAPHRASES[task_id])))
    question = PARAPHRASES[task_id][paraphrase_id]
    options, gold_index = assemble_options(vocab.labels, gold, rng)
    return MCItem(
        task_id=task_id,
        recording_ref=recording.recording_id,
        question=question,
        options=options,
        gold_index=gold_index,
        paraphrase_id=paraphrase_id,
        rng_seed=rng_seed,
    )


def build_dataset(
    corpus: list[tuple[PCGRecording, object, MurmurAnnotation]],
    manifest: SplitManifest,
    side: str,
    seed: int,
    vocabularies: dict | None = None,
) -> tuple[list[tuple[PCGRecording, MCItem]], dict[str, int]]:
    """All applicable items for the requested split side plus per-task counts."""
    pairs: list[tuple[PCGRecording, MCItem]] = []
    counts = {task_id: 0 for task_id in TASK_IDS}
    ordered = sorted(corpus, key=lambda e: (e[0].patient_id, e[0].recording_id))
    for recording, _, annotation in ordered:
        if manifest.side_of(recording.patient_id) != side:
            continue
        for task_id in TASK_IDS:
            item_seed = derive_seed(
                seed, recording.patient_id, recording.recording_id, task_id
            )
            item = build_mc_item(
                recording,
                annotation,
                task_id,
                np.random.default_rng(item_seed),
                rng_seed=item_seed,
                vocabularies=vocabularies,
            )
            if item is not None:
                pairs.append((recording, item))
                counts[task_id] += 1
    return pairs, {t: n for t, n in counts.items() if n > 0}


def write_dataset(
    path: str | Path,
    pairs: list[tuple[PCGRecording, MCItem]],
    split_tag: str,
    audio_root: str | Path,
) -> None:
    records = []
    for recording, item in pairs:
        rec = item.as_dict()
        rec["audio"] = str(Path(audio_root) / f"{recording.recording_id}.wav")
        rec["patient_id"] = recording.patient_id
        rec["split"] = split_tag
        rec["paraphrase_version"] = PARAPHRASE_VERSION
        records.append(rec)
    write_jsonl(path, records)


def read_dataset(path: str | Path) -> list[dict]:
    """Records with keys: audio, patient_id, split, plus the MCItem fields."""
    out = []
    for rec in read_jsonl(path):
        rec = dict(rec)
        rec["item"] = MCItem.from_dict(rec)
        out.append(rec)
    return out

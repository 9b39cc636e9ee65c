"""Patient-level stratified train/test split.

Within each murmur class the patient list is shuffled with the seed and
cut at round-half-up(ratio * n); every recording of a patient follows
its patient, so no patient can leak across the split.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ..errors import UsageError
from ..util import derive_seed, round_half_up

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SplitManifest:
    train_patients: tuple[str, ...]
    test_patients: tuple[str, ...]
    seed: int
    ratio: float
    class_counts: dict

    def side_of(self, patient_id: str) -> str:
        if patient_id in self._train_set:
            return "train"
        if patient_id in self._test_set:
            return "test"
        raise UsageError(f"patient {patient_id!r} not covered by the split manifest")

    def __post_init__(self):
        object.__setattr__(self, "_train_set", frozenset(self.train_patients))
        object.__setattr__(self, "_test_set", frozenset(self.test_patients))
        if self._train_set & self._test_set:
            raise UsageError("split manifest has patients on both sides")

    def patients(self, side: str) -> tuple[str, ...]:
        if side == "train":
            return self.train_patients
        if side == "test":
            return self.test_patients
        raise UsageError(f"unknown split side {side!r}")

    def as_dict(self) -> dict:
        return {
            "train_patients": list(self.train_patients),
            "test_patients": list(self.test_patients),
            "seed": self.seed,
            "ratio": self.ratio,
            "class_counts": self.class_counts,
        }

    @staticmethod
    def from_dict(d: dict) -> "SplitManifest":
        return SplitManifest(
            train_patients=tuple(d["train_patients"]),
            test_patients=tuple(d["test_patients"]),
            seed=int(d["seed"]),
            ratio=float(d["ratio"]),
            class_counts=d["class_counts"],
        )


def stratified_split(
    patients: list[tuple[str, str]], ratio: float, seed: int
) -> SplitManifest:
    """patients: (patient_id, murmur_class) pairs; ratio = train fraction."""
    if not 0.0 < ratio < 1.0:
        raise UsageError(f"split ratio must lie in (0, 1), got {ratio}")
    ids = [p for p, _ in patients]
    if len(set(ids)) != len(ids):
        raise UsageError("duplicate patient ids in split input")

    by_class: dict[str, list[str]] = {}
    for patient_id, murmur_class in patients:
        by_class.setdefault(murmur_class, []).append(patient_id)

    train: list[str] = []
    test: list[str] = []
    class_counts = {}
    for murmur_class in sorted(by_class):
        members = sorted(by_class[murmur_class])
        if not members:
            log.warning("class %s has no patients; contributes nothing", murmur_class)
            continue
        rng = np.random.default_rng(derive_seed(seed, "split", murmur_class))
        order = list(rng.permutation(members))
        n_train = min(len(order), round_half_up(ratio * len(order)))
        train.extend(order[:n_train])
        test.extend(order[n_train:])
        class_counts[murmur_class] = {"train": n_train, "test": len(order) - n_train}

    return SplitManifest(
        train_patients=tuple(sorted(train)),
        test_patients=tuple(sorted(test)),
        seed=seed,
        ratio=ratio,
        class_counts=class_counts,
    )

"""Synthetic corpus generator that writes the CirCor on-disk layout.

Produces a roster of patients with an exact Present/Absent/Unknown mix,
renders one synthetic recording per chosen auscultation site, and writes
wav + segmentation tsv + patient metadata txt so the regular loader can
round-trip the corpus. All randomness derives from the master seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..util import derive_seed
from .audio_io import write_wav
from .circor import SITE_CODES
from .records import FEATURE_NAMES, MurmurAnnotation
from .synth import ENVELOPES, TIMINGS, MurmurSpec, SynthSpec, murmur_annotation, synthesize_pcg

_TSV_CODE = {"unlabeled": 0, "S1": 1, "systole": 2, "S2": 3, "diastole": 4}
_SITE_ORDER = ("AV", "PV", "TV", "MV")


@dataclass(frozen=True)
class CorpusConfig:
    n_patients: int = 24
    seed: int = 0
    class_weights: tuple[float, float, float] = (0.74, 0.19, 0.07)  # Absent/Present/Unknown
    snr_db: float = 10.0
    unknown_snr_db: float = -2.0
    min_sites: int = 1
    max_sites: int = 2
    min_beats: int = 4
    max_beats: int = 8
    diastolic_fraction: float = 0.3
    sample_rate: int = 4000


def apportion(weights: tuple[float, ...], total: int) -> list[int]:
    """Largest-remainder apportionment of `total` into integer class counts."""
    raw = [w / sum(weights) * total for w in weights]
    counts = [int(np.floor(x)) for x in raw]
    remainders = sorted(range(len(raw)), key=lambda i: raw[i] - counts[i], reverse=True)
    for i in remainders[: total - sum(counts)]:
        counts[i] += 1
    return counts


def _draw_murmur(rng: np.random.Generator, diastolic_fraction: float, nyquist: float) -> MurmurSpec:
    phase = "diastolic" if rng.random() < diastolic_fraction else "systolic"
    low = float(rng.uniform(80.0, 400.0))
    high = min(low + float(rng.uniform(60.0, 350.0)), nyquist - 50.0)
    return MurmurSpec(
        phase=phase,
        band_hz=(low, high),
        shape=ENVELOPES[rng.integers(len(ENVELOPES))],
        rel_amplitude=float(rng.uniform(0.15, 0.6)),
        timing=TIMINGS[rng.integers(len(TIMINGS))],
    )


def plan_roster(config: CorpusConfig) -> list[dict]:
    """Deterministic roster: patient ids, classes, sites, and murmur params."""
    counts = apportion(config.class_weights, config.n_patients)
    classes = ["Absent"] * counts[0] + ["Present"] * counts[1] + ["Unknown"] * counts[2]
    rng = np.random.default_rng(derive_seed(config.seed, "roster"))
    rng.shuffle(classes)

    roster = []
    for i, murmur_class in enumerate(classes):
        patient_id = f"{10000 + i}"
        prng = np.random.default_rng(derive_seed(config.seed, "patient", patient_id))
        n_sites = int(prng.integers(config.min_sites, config.max_sites + 1))
        sites = list(prng.permutation(_SITE_ORDER)[:n_sites])
        murmur = None
        audible_sites: list[str] = []
        if murmur_class == "Present":
            murmur = _draw_murmur(
                prng, config.diastolic_fraction, config.sample_rate / 2.0
            )
            n_audible = int(prng.integers(1, n_sites + 1))
            audible_sites = sites[:n_audible]
        roster.append(
            {
                "patient_id": patient_id,
                "murmur_class": murmur_class,
                "sites": sites,
                "audible_sites": audible_sites,
                "murmur": murmur,
                "n_beats": int(prng.integers(config.min_beats, config.max_beats + 1)),
                "beat_period_s": float(prng.uniform(0.7, 0.9)),
            }
        )
    return roster


def _metadata_lines(patient: dict, config: CorpusConfig) -> list[str]:
    annotation: MurmurAnnotation
    if patient["murmur_class"] == "Present":
        annotation = murmur_annotation(
            SynthSpec(murmur=patient["murmur"], sample_rate=config.sample_rate)
        )
    else:
        annotation = MurmurAnnotation(patient["murmur_class"])

    lines = [f"{patient['patient_id']} {len(patient['sites'])} {config.sample_rate}"]
    lines.append(f"#Murmur: {patient['murmur_class']}")
    locations = "+".join(patient["audible_sites"]) if patient["audible_sites"] else "nan"
    lines.append(f"#Murmur locations: {locations}")
    for phase in ("systolic", "diastolic"):
        features = annotation.phase(phase)
        for name in FEATURE_NAMES:
            value = features.get(name) or "nan"
            lines.append(f"#{phase.capitalize()} murmur {name}: {value}")
    return lines


def generate_corpus(out_dir: str | Path, config: CorpusConfig) -> dict:
    """Write the corpus; returns a summary with per-class counts."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    roster = plan_roster(config)

    n_recordings = 0
    for patient in roster:
        for site_code in patient["sites"]:
            audible = site_code in patient["audible_sites"]
            spec = SynthSpec(
                n_beats=patient["n_beats"],
                beat_period_s=patient["beat_period_s"],
                murmur=patient["murmur"] if audible else None,
                noise_snr_db=(
                    config.unknown_snr_db
                    if patient["murmur_class"] == "Unknown"
                    else config.snr_db
                ),
                seed=derive_seed(config.seed, "audio", patient["patient_id"], site_code),
                sample_rate=config.sample_rate,
            )
            recording, segments, _ = synthesize_pcg(spec)
            stem = f"{patient['patient_id']}_{site_code}"
            write_wav(out / f"{stem}.wav", config.sample_rate, recording.samples)
            with open(out / f"{stem}.tsv", "w", encoding="utf-8") as f:
                for onset, offset, state in segments:
                    f.write(f"{onset:.6f}\t{offset:.6f}\t{_TSV_CODE[state]}\n")
            n_recordings += 1
        (out / f"{patient['patient_id']}.txt").write_text(
            "\n".join(_metadata_lines(patient, config)) + "\n", encoding="utf-8"
        )

    class_counts: dict[str, int] = {}
    for patient in roster:
        class_counts[patient["murmur_class"]] = class_counts.get(patient["murmur_class"], 0) + 1
    return {
        "patients": len(roster),
        "recordings": n_recordings,
        "class_counts": class_counts,
        "seed": config.seed,
    }

"""End-to-end orchestration behind the CLI subcommands.

Every stage writes into its own run directory: the fully resolved
config, content hashes of every input it consumed, and the artifact
version, so a finished directory is reconstructible on its own. Nothing
written here contains wall-clock state; reruns with the same config
produce byte-identical files.
"""

from __future__ import annotations

import json
import logging
import shutil
from pathlib import Path

import numpy as np

from . import ARTIFACT_VERSION
from .audio_lm.checkpoint import load_lm, save_lm
from .audio_lm.lora import lora_wrap
from .audio_lm.model import AudioLM
from .audio_lm.scoring import score_options
from .audio_lm.train import finetune
from .config import RunConfig, config_hash, config_to_dict
from .container import checkpoint_hash
from .dsp import FrontendConfig, frame_labels, prep_patches
from .errors import DataError, UsageError
from .eval.logs import PredictionEntry, PredictionLog, write_log
from .eval.metrics import (
    accuracy_by_task,
    class_precision,
    presence_to_binary,
    weighted_accuracy,
)
from .eval.report import EvalReport, REFERENCE_REPORTS, render_report
from .ingest.audio_io import read_wav
from .ingest.binary import load_binary_dataset
from .ingest.circor import load_circor
from .ingest.corpus import generate_corpus
from .ingest.records import MurmurAnnotation, PCGRecording
from .segmenter.checkpoint import load_segmenter, save_segmenter
from .segmenter.model import SegmenterModel, seg_forward
from .segmenter.postprocess import gate_audio, mask_to_intervals
from .segmenter.train import train_segmenter
from .tasks.build import MCItem, assemble_options, build_dataset, read_dataset, write_dataset
from .tasks.split import SplitManifest, stratified_split
from .tasks.vocab import DEFAULT_VOCABULARIES, PARAPHRASES, TASK_IDS
from .util import canonical_json, derive_seed, hash_file, hash_json, write_jsonl
from .nn.optim import make_optimizer

log = logging.getLogger(__name__)

EVAL_DATASETS = ("circor_test", "cinc2016", "pascal_a", "pascal_b")


# ------------------------------------------------------------ run dirs


def prepare_run_dir(out_dir: str | Path, force: bool, reuse: bool = False) -> Path:
    out = Path(out_dir)
    if out.exists() and any(out.iterdir()):
        if reuse:
            return out
        if not force:
            raise UsageError(
                f"output directory {out} is not empty; pass --force to overwrite"
            )
        shutil.rmtree(out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def write_run_stamp(out_dir: Path, config: RunConfig, inputs: dict[str, str]) -> None:
    stamp = {
        "artifact": ARTIFACT_VERSION,
        "config_hash": config_hash(config),
        "inputs": inputs,
    }
    (out_dir / "resolved_config.json").write_text(
        canonical_json(config_to_dict(config)) + "\n", encoding="utf-8"
    )
    (out_dir / "run.json").write_text(canonical_json(stamp) + "\n", encoding="utf-8")


# --------------------------------------------------------------- synth


def run_synth(config: RunConfig, out_dir: str | Path | None = None, force: bool = False) -> Path:
    corpus_dir = Path(out_dir) if out_dir else config.data_path("circor_root")
    corpus_dir = prepare_run_dir(corpus_dir, force)
    summary = generate_corpus(corpus_dir, config.corpus_config())
    (corpus_dir / "corpus_summary.json").write_text(
        canonical_json(summary) + "\n", encoding="utf-8"
    )
    log.info("synthesized %d recordings for %d patients", summary["recordings"], summary["patients"])
    return corpus_dir


# ------------------------------------------------------- build-dataset


def dataset_file_hashes(dataset_dir: Path) -> dict[str, str]:
    return {
        name: hash_file(dataset_dir / name)
        for name in ("manifest.json", "train.jsonl", "test.jsonl")
    }


def dataset_hash(dataset_dir: Path) -> str:
    return hash_json(dataset_file_hashes(Path(dataset_dir)))


def run_build_dataset(
    config: RunConfig, out_dir: str | Path | None = None, force: bool = False
) -> Path:
    corpus_root = config.data_path("circor_root")
    corpus = load_circor(corpus_root)
    if not corpus:
        raise DataError(f"no recordings found under {corpus_root}")
    out = prepare_run_dir(out_dir or Path(config.out_dir) / "dataset", force)

    patients = sorted({(rec.patient_id, ann.murmur_class) for rec, _, ann in corpus})
    manifest = stratified_split(patients, config.split.ratio, config.split_seed())
    (out / "manifest.json").write_text(
        canonical_json(manifest.as_dict()) + "\n", encoding="utf-8"
    )

    counts = {}
    for side in ("train", "test"):
        pairs, side_counts = build_dataset(corpus, manifest, side, config.tasks_seed())
        write_dataset(out / f"{side}.jsonl", pairs, side, corpus_root)
        counts[side] = side_counts
    counts["task_ids"] = list(TASK_IDS)
    (out / "counts.json").write_text(canonical_json(counts) + "\n", encoding="utf-8")

    write_run_stamp(out, config, {"corpus_root": str(corpus_root)})
    log.info("dataset written to %s (%s)", out, counts)
    return out


# ------------------------------------------------------------ training


def _load_recording(record: dict) -> PCGRecording:
    rate, samples = read_wav(record["audio"])
    stem = Path(record["audio"]).stem
    return PCGRecording(
        patient_id=record["patient_id"],
        site="unknown",
        samples=samples,
        sample_rate=rate,
        recording_id=stem,
    )


def seg_training_data(config: RunConfig, dataset_dir: Path):
    """(patches, mask) pairs for the train-side recordings with intervals."""
    manifest = SplitManifest.from_dict(
        json.loads((dataset_dir / "manifest.json").read_text())
    )
    corpus = load_circor(config.data_path("circor_root"))
    frontend = config.frontend
    data = []
    for recording, intervals, _ in corpus:
        if manifest.side_of(recording.patient_id) != "train":
            continue
        if len(intervals) == 0:
            log.warning("skipping %s: no segmentation intervals", recording.recording_id)
            continue
        patches = prep_patches(recording, frontend)
        mask = frame_labels(
            intervals,
            patches.n_frames,
            frontend.spectrogram.hop / frontend.target_rate,
            mode=config.segmenter.label_mode,
        )
        data.append((patches, mask))
    if not data:
        raise DataError("no annotated train-side recordings for segmenter training")
    return data


def run_train_seg(
    config: RunConfig,
    dataset_dir: str | Path,
    out_dir: str | Path | None = None,
    resume: bool = False,
    force: bool = False,
) -> Path:
    dataset_dir = Path(dataset_dir)
    out = prepare_run_dir(out_dir or Path(config.out_dir) / "seg", force, reuse=resume)
    ckpt_path = out / "pcgseg.ckpt"
    train_cfg = config.seg_train_config()
    cfg_hash, ds_hash = config_hash(config), dataset_hash(dataset_dir)

    model, start_step = None, 0
    optimizer = make_optimizer(train_cfg.optimizer, train_cfg.lr)
    if resume:
        if not ckpt_path.exists():
            raise DataError(f"--resume requested but {ckpt_path} does not exist")
        model, _, train_meta, opt_meta, opt_tensors = load_segmenter(ckpt_path)
        if train_meta["config_hash"] != cfg_hash or train_meta["dataset_hash"] != ds_hash:
            raise DataError("resume refused: config or dataset hash mismatch")
        start_step = int(train_meta["step"])
        optimizer.load_state(opt_meta, opt_tensors)

    data = seg_training_data(config, dataset_dir)

    def save(model, optimizer, step, curve_rows):
        meta = {
            "step": step,
            "steps_total": train_cfg.steps,
            "train_fraction": train_cfg.train_fraction,
            "seed": train_cfg.seed,
            "config_hash": cfg_hash,
            "dataset_hash": ds_hash,
            "frontend": config.frontend.as_dict(),
            "label_mode": config.segmenter.label_mode,
            "thresholds": {
                "on": config.segmenter.on_threshold,
                "off": config.segmenter.off_threshold,
                "min_dur_s": config.segmenter.min_dur_s,
            },
            "gate_policy": config.segmenter.gate_policy,
        }
        save_segmenter(
            ckpt_path, model, config.frontend.spectrogram,
            train_meta=meta, opt_meta=optimizer.state_dict(),
            opt_tensors=optimizer.state_tensors(),
        )
        if curve_rows:
            with open(out / "curve.jsonl", "a", encoding="utf-8") as f:
                for row in curve_rows:
                    f.write(canonical_json(row) + "\n")

    from dataclasses import replace

    step = start_step
    if model is None and train_cfg.steps == 0:
        model, _ = train_segmenter(data, train_cfg)
        save(model, optimizer, 0, [])
    while step < train_cfg.steps:
        target = min(step + config.segmenter.save_every, train_cfg.steps)
        stage_cfg = replace(train_cfg, steps=target)
        model, curve = train_segmenter(
            data, stage_cfg, model=model, optimizer=optimizer, start_step=step
        )
        save(model, optimizer, target, curve)
        step = target

    write_run_stamp(out, config, dict(dataset_file_hashes(dataset_dir), dataset=ds_hash))
    return ckpt_path


def lm_training_pairs(dataset_dir: Path):
    records = read_dataset(Path(dataset_dir) / "train.jsonl")
    recordings: dict[str, PCGRecording] = {}
    pairs = []
    for record in records:
        stem = Path(record["audio"]).stem
        if stem not in recordings:
            recordings[stem] = _load_recording(record)
        pairs.append((recordings[stem], record["item"]))
    if not pairs:
        raise DataError(f"{dataset_dir}/train.jsonl holds no items")
    return pairs


def run_train_lm(
    config: RunConfig,
    dataset_dir: str | Path,
    out_dir: str | Path | None = None,
    resume: bool = False,
    force: bool = False,
) -> Path:
    dataset_dir = Path(dataset_dir)
    out = prepare_run_dir(out_dir or Path(config.out_dir) / "lm", force, reuse=resume)
    ckpt_path = out / "pcglm.ckpt"
    train_cfg = config.lm_train_config()
    cfg_hash, ds_hash = config_hash(config), dataset_hash(dataset_dir)

    if resume:
        if not ckpt_path.exists():
            raise DataError(f"--resume requested but {ckpt_path} does not exist")
        model, meta, opt_tensors = load_lm(ckpt_path)
        if (
            meta["train"]["config_hash"] != cfg_hash
            or meta["train"]["dataset_hash"] != ds_hash
        ):
            raise DataError("resume refused: config or dataset hash mismatch")
        start_step = int(meta["train"]["step"])
        optimizer = make_optimizer(train_cfg.optimizer, train_cfg.lr)
        optimizer.load_state(meta["optimizer"], opt_tensors)
    else:
        model = lora_wrap(
            AudioLM(config.lm_model_config()),
            rank=train_cfg.rank,
            alpha=train_cfg.alpha,
            targets=train_cfg.targets,
        )
        optimizer = make_optimizer(train_cfg.optimizer, train_cfg.lr)
        start_step = 0

    pairs = lm_training_pairs(dataset_dir)

    def save(step, curve_rows):
        meta = {
            "step": step,
            "steps_total": train_cfg.steps,
            "config_hash": cfg_hash,
            "dataset_hash": ds_hash,
            "frontend": config.frontend.as_dict(),
        }
        save_lm(
            ckpt_path, model, train_meta=meta,
            opt_meta=optimizer.state_dict(), opt_tensors=optimizer.state_tensors(),
        )
        if curve_rows:
            with open(out / "curve.jsonl", "a", encoding="utf-8") as f:
                for row in curve_rows:
                    f.write(canonical_json(row) + "\n")

    from dataclasses import replace

    step = start_step
    if train_cfg.steps == 0:
        save(0, [])
    while step < train_cfg.steps:
        target = min(step + config.lm.save_every, train_cfg.steps)
        stage_cfg = replace(train_cfg, steps=target)
        model, curve = finetune(
            model, pairs, stage_cfg, frontend=config.frontend,
            optimizer=optimizer, start_step=step,
        )
        save(target, curve)
        step = target

    write_run_stamp(out, config, dict(dataset_file_hashes(dataset_dir), dataset=ds_hash))
    return ckpt_path


# ---------------------------------------------------------------- eval


class SegmenterGate:
    """Loads a segmenter checkpoint and gates recordings with it."""

    def __init__(self, ckpt_path: str | Path, config: RunConfig):
        self.model, spectrogram, train_meta, _, _ = load_segmenter(ckpt_path)
        self.frontend = FrontendConfig.from_dict(train_meta["frontend"])
        thresholds = train_meta.get("thresholds", {})
        self.on = thresholds.get("on", config.segmenter.on_threshold)
        self.off = thresholds.get("off", config.segmenter.off_threshold)
        self.min_dur_s = thresholds.get("min_dur_s", config.segmenter.min_dur_s)
        self.policy = train_meta.get("gate_policy", config.segmenter.gate_policy)
        self.tag = "pcgseg-" + checkpoint_hash(ckpt_path)[:12]

    def __call__(self, recording: PCGRecording) -> PCGRecording:
        patches = prep_patches(recording, self.frontend)
        probs = seg_forward(self.model, patches)
        intervals = mask_to_intervals(probs, self.on, self.off, self.min_dur_s)
        return gate_audio(recording, intervals, self.policy)


def _predict_item(model: AudioLM, patches, item: MCItem):
    scores = score_options(model, patches, item)
    idx = int(np.argmax(scores))
    return item.options[idx], scores


def eval_circor_test(config: RunConfig, dataset_dir: Path, model: AudioLM, gate) -> PredictionLog:
    records = read_dataset(dataset_dir / "test.jsonl")
    if not records:
        raise DataError(f"{dataset_dir}/test.jsonl holds no items")
    log_ = PredictionLog(model_tag="", config_hash="", mode="WS" if gate else "NS")
    patch_cache: dict[str, object] = {}
    for record in records:
        stem = Path(record["audio"]).stem
        if stem not in patch_cache:
            recording = _load_recording(record)
            if gate is not None:
                recording = gate(recording)
            patch_cache[stem] = prep_patches(recording, config.frontend)
        item = record["item"]
        predicted, scores = _predict_item(model, patch_cache[stem], item)
        log_.add(
            PredictionEntry(
                item_ref=f"{item.recording_ref}:{item.task_id}",
                task_id=item.task_id,
                gold=item.gold_label,
                predicted=predicted,
                scores=tuple(float(s) for s in scores),
            )
        )
    return log_


def zeroshot_item(recording: PCGRecording, binary_label: str, seed: int) -> MCItem:
    """Presence-style question on out-of-distribution audio."""
    rng = np.random.default_rng(seed)
    vocab = DEFAULT_VOCABULARIES["murmur_presence"]
    pseudo_gold = "Absent" if binary_label == "normal" else "Present"
    paraphrase_id = int(rng.integers(len(PARAPHRASES["murmur_presence"])))
    options, gold_index = assemble_options(vocab.labels, pseudo_gold, rng)
    return MCItem(
        task_id="murmur_presence",
        recording_ref=recording.recording_id,
        question=PARAPHRASES["murmur_presence"][paraphrase_id],
        options=options,
        gold_index=gold_index,
        paraphrase_id=paraphrase_id,
        rng_seed=seed,
    )


def eval_binary(config: RunConfig, kind: str, model: AudioLM, gate) -> PredictionLog:
    root = config.data_path(f"{kind}_root")
    entries = load_binary_dataset(root, kind)
    if not entries:
        raise DataError(f"no recordings found for {kind} under {root}")
    log_ = PredictionLog(model_tag="", config_hash="", mode="WS" if gate else "NS")
    for recording, binary_label in entries:
        item = zeroshot_item(
            recording, binary_label,
            derive_seed(config.tasks_seed(), "zeroshot", kind, recording.recording_id),
        )
        gated = gate(recording) if gate is not None else recording
        patches = prep_patches(gated, config.frontend)
        predicted_presence, scores = _predict_item(model, patches, item)
        log_.add(
            PredictionEntry(
                item_ref=f"{recording.recording_id}:binary_presence",
                task_id="binary_presence",
                gold=binary_label,
                predicted=presence_to_binary(predicted_presence),
                scores=tuple(float(s) for s in scores),
            )
        )
    return log_


def report_from_log(
    log_: PredictionLog, system: str, dataset: str, weights: dict
) -> EvalReport:
    acc = accuracy_by_task(log_)
    counts: dict[str, int] = {}
    for e in log_.entries:
        counts[e.task_id] = counts.get(e.task_id, 0) + 1
    wacc = None
    if log_.for_task("murmur_presence"):
        wacc = weighted_accuracy(log_, weights)
    precision: dict[str, float | None] = {}
    if dataset in ("cinc2016", "pascal_a", "pascal_b"):
        pairs = [(e.gold, e.predicted) for e in log_.entries]
        precision = {
            "normal": class_precision(pairs, "normal"),
            "abnormal": class_precision(pairs, "abnormal"),
        }
    return EvalReport(
        system=system,
        mode=log_.mode,
        dataset=dataset,
        per_task_accuracy=acc,
        counts=counts,
        weighted_accuracy=wacc,
        precision=precision,
    )


def run_eval(
    config: RunConfig,
    lm_ckpt: str | Path,
    mode: str,
    dataset: str,
    dataset_dir: str | Path | None = None,
    segmenter_ckpt: str | Path | None = None,
    out_dir: str | Path | None = None,
    force: bool = False,
) -> Path:
    if mode not in ("NS", "WS"):
        raise UsageError(f"mode must be NS or WS, got {mode!r}")
    if dataset not in EVAL_DATASETS:
        raise UsageError(f"dataset must be one of {EVAL_DATASETS}, got {dataset!r}")
    if mode == "WS" and segmenter_ckpt is None:
        raise UsageError("WS mode requires a segmenter checkpoint (--segmenter)")
    if dataset == "circor_test" and dataset_dir is None:
        raise UsageError("evaluating circor_test requires --dataset-dir")

    model, lm_meta, _ = load_lm(lm_ckpt)
    gate = SegmenterGate(segmenter_ckpt, config) if mode == "WS" else None
    out = prepare_run_dir(
        out_dir or Path(config.out_dir) / f"eval-{mode}-{dataset}", force
    )

    if dataset == "circor_test":
        log_ = eval_circor_test(config, Path(dataset_dir), model, gate)
    else:
        log_ = eval_binary(config, dataset, model, gate)

    model_tag = "pcglm-" + checkpoint_hash(lm_ckpt)[:12]
    log_.model_tag = model_tag
    log_.config_hash = config_hash(config)
    write_log(out / "predictions.jsonl", log_)

    report = report_from_log(log_, model_tag, dataset, config.eval.weights)
    text, machine = render_report([report])
    (out / "report.txt").write_text(text, encoding="utf-8")
    (out / "report.json").write_text(canonical_json(machine) + "\n", encoding="utf-8")

    inputs = {"lm_ckpt": checkpoint_hash(lm_ckpt)}
    if segmenter_ckpt is not None:
        inputs["segmenter_ckpt"] = checkpoint_hash(segmenter_ckpt)
    if dataset_dir is not None:
        inputs["dataset"] = dataset_hash(Path(dataset_dir))
    write_run_stamp(out, config, inputs)
    return out


def run_report(
    report_paths: list[str | Path],
    config: RunConfig,
    out_dir: str | Path | None = None,
    force: bool = False,
) -> Path:
    reports = []
    inputs = {}
    for path in report_paths:
        machine = json.loads(Path(path).read_text(encoding="utf-8"))
        reports.extend(EvalReport.from_dict(d) for d in machine["reports"])
        inputs[str(path)] = hash_file(path)
    out = prepare_run_dir(out_dir or Path(config.out_dir) / "report", force)
    text, machine = render_report(reports, REFERENCE_REPORTS)
    (out / "report.txt").write_text(text, encoding="utf-8")
    (out / "report.json").write_text(canonical_json(machine) + "\n", encoding="utf-8")
    write_run_stamp(out, config, inputs)
    return out

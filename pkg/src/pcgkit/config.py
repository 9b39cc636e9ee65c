"""Run configuration: one structured document drives every subcommand.

A single master seed feeds all stages through derived per-stage seeds,
so two runs with the same resolved config are identical end to end.
Unknown keys are rejected rather than ignored; every run writes its
fully resolved config next to its outputs.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields, is_dataclass
from pathlib import Path
from typing import Any

import yaml

from .audio_lm.lora import DEFAULT_TARGETS
from .audio_lm.model import LMConfig
from .audio_lm.train import LMTrainConfig
from .dsp import FrontendConfig, SpectrogramParams
from .errors import UsageError
from .ingest.corpus import CorpusConfig
from .segmenter.train import SegTrainConfig
from .util import derive_seed, hash_json

DATA_ROOT_ENV = "PCGKIT_DATA_ROOT"


@dataclass(frozen=True)
class DataConfig:
    circor_root: str = "data/circor"
    cinc2016_root: str = "data/cinc2016"
    pascal_a_root: str = "data/pascal_a"
    pascal_b_root: str = "data/pascal_b"


@dataclass(frozen=True)
class SegmenterSection:
    lr: float = 3e-3
    steps: int = 300
    batch: int = 8
    train_fraction: float = 1.0 / 3.0
    width: int = 64
    layers: int = 2
    optimizer: str = "adam"
    label_mode: str = "broad"  # which interval states count as heartbeat
    on_threshold: float = 0.6
    off_threshold: float = 0.4
    min_dur_s: float = 0.03
    gate_policy: str = "excise"
    save_every: int = 100


@dataclass(frozen=True)
class LMSection:
    width: int = 128
    blocks: int = 4
    heads: int = 4
    mlp_mult: int = 2
    max_len: int = 2048
    enc_width: int = 64
    enc_layers: int = 2
    pool_stride: int = 4
    lr: float = 1e-3
    steps: int = 500
    batch: int = 4
    rank: int = 8
    alpha: float = 16.0
    targets: tuple[str, ...] = DEFAULT_TARGETS
    train_projector: bool = True
    optimizer: str = "adam"
    save_every: int = 100


@dataclass(frozen=True)
class SplitSection:
    ratio: float = 0.75


@dataclass(frozen=True)
class EvalSection:
    weights: dict = field(
        default_factory=lambda: {"Present": 5, "Unknown": 3, "Absent": 1}
    )


@dataclass(frozen=True)
class SynthSection:
    n_patients: int = 24
    class_weights: tuple[float, float, float] = (0.74, 0.19, 0.07)
    snr_db: float = 10.0
    unknown_snr_db: float = -2.0
    min_sites: int = 1
    max_sites: int = 2
    min_beats: int = 4
    max_beats: int = 8
    diastolic_fraction: float = 0.3
    sample_rate: int = 4000


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    out_dir: str = "runs/default"
    data: DataConfig = DataConfig()
    frontend: FrontendConfig = FrontendConfig()
    segmenter: SegmenterSection = SegmenterSection()
    lm: LMSection = LMSection()
    split: SplitSection = SplitSection()
    eval: EvalSection = EvalSection()
    synth: SynthSection = SynthSection()

    # ------------------------------------------------ derived sub-configs

    def seg_train_config(self) -> SegTrainConfig:
        s = self.segmenter
        return SegTrainConfig(
            lr=s.lr,
            steps=s.steps,
            batch=s.batch,
            seed=derive_seed(self.seed, "segmenter"),
            train_fraction=s.train_fraction,
            width=s.width,
            layers=s.layers,
            optimizer=s.optimizer,
        )

    def lm_model_config(self) -> LMConfig:
        m = self.lm
        return LMConfig(
            width=m.width,
            blocks=m.blocks,
            heads=m.heads,
            mlp_mult=m.mlp_mult,
            max_len=m.max_len,
            enc_width=m.enc_width,
            enc_layers=m.enc_layers,
            pool_stride=m.pool_stride,
            patch_shape=self.frontend.patch_shape,
            seed=derive_seed(self.seed, "lm-model"),
        )

    def lm_train_config(self) -> LMTrainConfig:
        m = self.lm
        return LMTrainConfig(
            lr=m.lr,
            steps=m.steps,
            batch=m.batch,
            seed=derive_seed(self.seed, "lm-train"),
            rank=m.rank,
            alpha=m.alpha,
            targets=tuple(m.targets),
            train_projector=m.train_projector,
            optimizer=m.optimizer,
        )

    def corpus_config(self) -> CorpusConfig:
        s = self.synth
        return CorpusConfig(
            n_patients=s.n_patients,
            seed=derive_seed(self.seed, "synth"),
            class_weights=tuple(s.class_weights),
            snr_db=s.snr_db,
            unknown_snr_db=s.unknown_snr_db,
            min_sites=s.min_sites,
            max_sites=s.max_sites,
            min_beats=s.min_beats,
            max_beats=s.max_beats,
            diastolic_fraction=s.diastolic_fraction,
            sample_rate=s.sample_rate,
        )

    def split_seed(self) -> int:
        return derive_seed(self.seed, "split")

    def tasks_seed(self) -> int:
        return derive_seed(self.seed, "tasks")

    def data_path(self, name: str) -> Path:
        """Resolve a data root, honoring the PCGKIT_DATA_ROOT override."""
        raw = Path(getattr(self.data, name))
        base = os.environ.get(DATA_ROOT_ENV)
        if base and not raw.is_absolute():
            return Path(base) / raw
        return raw


# --------------------------------------------------------- dict plumbing


def _to_plain(value: Any) -> Any:
    if is_dataclass(value) and not isinstance(value, type):
        return {f.name: _to_plain(getattr(value, f.name)) for f in fields(value)}
    if isinstance(value, tuple):
        return [_to_plain(v) for v in value]
    if isinstance(value, dict):
        return {k: _to_plain(v) for k, v in value.items()}
    return value


def config_to_dict(config: RunConfig) -> dict:
    return _to_plain(config)


def config_hash(config: RunConfig) -> str:
    return hash_json(config_to_dict(config))


def _build_dataclass(cls, data: dict, path: str):
    if not isinstance(data, dict):
        raise UsageError(f"config section {path or '<root>'} must be a mapping")
    known = {f.name: f for f in fields(cls)}
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise UsageError(f"unknown config keys at {path or '<root>'}: {unknown}")
    kwargs = {}
    defaults = cls()
    for name, value in data.items():
        where = f"{path}.{name}" if path else name
        default = getattr(defaults, name)
        if is_dataclass(default):
            kwargs[name] = _build_dataclass(type(default), value, where)
        elif isinstance(default, tuple):
            if not isinstance(value, (list, tuple)):
                raise UsageError(f"config key {where} must be a list")
            kwargs[name] = tuple(value)
        else:
            kwargs[name] = value
    return cls(**kwargs)


def config_from_dict(data: dict) -> RunConfig:
    return _build_dataclass(RunConfig, data or {}, "")


def load_config(path: str | Path | None) -> RunConfig:
    """Load a YAML config file; None gives the built-in defaults."""
    if path is None:
        return RunConfig()
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        raise UsageError(f"{path}: invalid YAML ({exc})") from exc
    return config_from_dict(data)


def with_overrides(config: RunConfig, seed: int | None = None, out_dir: str | None = None) -> RunConfig:
    data = config_to_dict(config)
    if seed is not None:
        data["seed"] = int(seed)
    if out_dir is not None:
        data["out_dir"] = str(out_dir)
    return config_from_dict(data)

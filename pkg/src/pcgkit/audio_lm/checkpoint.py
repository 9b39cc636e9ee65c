"""Audio-LM checkpoint: format "pcglm-v1".

Base weights and adapter factors are stored separately so a merge is
always reproducible from the checkpoint; adapter-only exports carry the
same format with base_included=false and require a compatible base
model at load time.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..container import load_container, save_container
from ..errors import DataError
from .model import AudioLM, LMConfig

LM_FORMAT = "pcglm-v1"


def save_lm(
    path: str | Path,
    model: AudioLM,
    train_meta: dict | None = None,
    opt_meta: dict | None = None,
    opt_tensors: dict[str, np.ndarray] | None = None,
    include_base: bool = True,
) -> None:
    adapter_param_names = set()
    adapters_meta = {}
    for name in sorted(model.adapters):
        a = model.adapters[name]
        adapters_meta[name] = {"rank": a.rank, "alpha": a.alpha}
        adapter_param_names.update((a.A.name, a.B.name))

    meta = {
        "config": model.config.as_dict(),
        "tokenizer": model.tokenizer.describe(),
        "adapters": adapters_meta,
        "trainable": sorted(n for n, p in model.params.items() if p.trainable),
        "base_included": include_base,
        "train": train_meta or {},
        "optimizer": opt_meta or {},
    }
    tensors: dict[str, np.ndarray] = {}
    if include_base:
        for name in sorted(model.params):
            if name not in adapter_param_names:
                tensors[f"base.{name}"] = model.params[name].value
    for name in sorted(model.adapters):
        a = model.adapters[name]
        tensors[f"adapter.{name}.A"] = a.A.value
        tensors[f"adapter.{name}.B"] = a.B.value
    for key, arr in (opt_tensors or {}).items():
        tensors[key] = arr
    save_container(path, LM_FORMAT, meta, tensors)


def load_lm(
    path: str | Path, base_model: AudioLM | None = None
) -> tuple[AudioLM, dict, dict[str, np.ndarray]]:
    """Returns (model, meta, optimizer tensors)."""
    _, meta, tensors = load_container(path, expect_format=LM_FORMAT)
    config = LMConfig.from_dict(meta["config"])

    if meta["base_included"]:
        model = AudioLM(config)
        for name, p in model.params.items():
            key = f"base.{name}"
            if key not in tensors:
                raise DataError(f"{path}: missing base tensor {key}")
            p.value = tensors[key].copy()
    else:
        if base_model is None:
            raise DataError(
                f"{path} is an adapter-only export; a base model is required"
            )
        if base_model.config != config:
            raise DataError(f"{path}: base model config does not match checkpoint")
        if base_model.adapters:
            raise DataError("base model already has adapters")
        model = base_model

    rng = np.random.default_rng(0)
    for name in sorted(meta["adapters"]):
        spec = meta["adapters"][name]
        adapter = model.store.attach_adapter(name, int(spec["rank"]), float(spec["alpha"]), rng)
        adapter.A.value = tensors[f"adapter.{name}.A"].copy()
        adapter.B.value = tensors[f"adapter.{name}.B"].copy()

    trainable = set(meta["trainable"])
    for name, p in model.params.items():
        p.trainable = name in trainable
    opt_tensors = {k: v for k, v in tensors.items() if k.startswith("opt.")}
    return model, meta, opt_tensors

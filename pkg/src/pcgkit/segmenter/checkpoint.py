"""Segmenter checkpoint: format "pcgseg-v1".

The container stores every parameter tensor plus the hyperparameters,
the spectrogram parameters used at training time (so inference always
matches), and optional training state for resumption.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..container import load_container, save_container
from ..dsp import SpectrogramParams
from .model import SegmenterHyperparams, SegmenterModel

SEG_FORMAT = "pcgseg-v1"


def save_segmenter(
    path: str | Path,
    model: SegmenterModel,
    spectrogram: SpectrogramParams,
    train_meta: dict | None = None,
    opt_meta: dict | None = None,
    opt_tensors: dict[str, np.ndarray] | None = None,
) -> None:
    meta = {
        "hyperparams": model.hyper.as_dict(),
        "spectrogram": spectrogram.as_dict(),
        "train": train_meta or {},
        "optimizer": opt_meta or {},
    }
    tensors = {f"param.{name}": p.value for name, p in sorted(model.params.items())}
    for key, arr in (opt_tensors or {}).items():
        tensors[key] = arr
    save_container(path, SEG_FORMAT, meta, tensors)


def load_segmenter(
    path: str | Path,
) -> tuple[SegmenterModel, SpectrogramParams, dict, dict, dict[str, np.ndarray]]:
    """Returns (model, spectrogram_params, train_meta, opt_meta, opt_tensors)."""
    _, meta, tensors = load_container(path, expect_format=SEG_FORMAT)
    model = SegmenterModel(SegmenterHyperparams.from_dict(meta["hyperparams"]))
    for name, p in model.params.items():
        p.value = tensors[f"param.{name}"].copy()
    spectrogram = SpectrogramParams(**meta["spectrogram"])
    opt_tensors = {k: v for k, v in tensors.items() if k.startswith("opt.")}
    return model, spectrogram, meta["train"], meta["optimizer"], opt_tensors

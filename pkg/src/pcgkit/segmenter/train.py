"""Seeded, resumable gradient training of the segmenter.

Only a seeded random fraction of the supplied data (default one third)
is ever visited; batch composition at step s depends solely on
(seed, s), so an interrupted run resumed from a checkpoint follows the
identical trajectory as an uninterrupted one.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ..dsp import FrameMask, PatchSequence
from ..errors import NumericError, UsageError
from ..nn.optim import make_optimizer
from ..util import derive_seed, round_half_up
from .loss import bce_from_logits
from .model import SegmenterHyperparams, SegmenterModel

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SegTrainConfig:
    lr: float = 3e-3
    steps: int = 300
    batch: int = 8
    seed: int = 0
    train_fraction: float = 1.0 / 3.0
    width: int = 64
    layers: int = 2
    optimizer: str = "adam"
    log_every: int = 10

    def __post_init__(self):
        if not 0.0 < self.train_fraction <= 1.0:
            raise UsageError("train_fraction must lie in (0, 1]")
        if self.steps < 0 or self.batch < 1:
            raise UsageError("steps must be >= 0 and batch >= 1")


def training_subset(n_items: int, fraction: float, seed: int) -> np.ndarray:
    """Seeded uniform subset of item indices covering `fraction` of the data."""
    k = min(n_items, max(1, round_half_up(fraction * n_items)))
    order = np.random.default_rng(derive_seed(seed, "train-subset")).permutation(n_items)
    return np.sort(order[:k])


def batch_indices(subset: np.ndarray, batch: int, seed: int, step: int) -> np.ndarray:
    rng = np.random.default_rng(derive_seed(seed, "batch", step))
    replace = len(subset) < batch
    return rng.choice(subset, size=batch, replace=replace)


def train_segmenter(
    data: list[tuple[PatchSequence, FrameMask]],
    config: SegTrainConfig = SegTrainConfig(),
    model: SegmenterModel | None = None,
    optimizer=None,
    start_step: int = 0,
) -> tuple[SegmenterModel, list[dict]]:
    """Train on a seeded train_fraction subset; returns (model, curve).

    Pass model/optimizer/start_step to resume from a checkpoint; fresh
    runs leave them unset.
    """
    if not data:
        raise UsageError("train_segmenter needs a non-empty dataset")
    for patches, mask in data:
        if patches.n_frames != len(mask):
            raise UsageError(
                f"patch sequence covers {patches.n_frames} frames but mask has {len(mask)}"
            )

    if model is None:
        hyper = SegmenterHyperparams(
            width=config.width,
            layers=config.layers,
            patch_shape=tuple(data[0][0].patch_shape),
        )
        model = SegmenterModel(hyper, seed=derive_seed(config.seed, "init"))
    if optimizer is None:
        optimizer = make_optimizer(config.optimizer, config.lr)

    subset = training_subset(len(data), config.train_fraction, config.seed)
    log.info("training on %d of %d recordings", len(subset), len(data))

    curve: list[dict] = []
    for step in range(start_step, config.steps):
        model.store.zero_grads()
        idx = batch_indices(subset, config.batch, config.seed, step)
        total = 0.0
        for i in idx:
            patches, mask = data[i]
            logits, cache = model.forward_logits(patches)
            loss, dlogits = bce_from_logits(logits, mask.values)
            total += loss
            model.backward_from_logits(patches, cache, dlogits / config.batch)
        mean_loss = total / config.batch
        if not np.isfinite(mean_loss):
            raise NumericError(
                f"segmenter training diverged: loss={mean_loss} at step {step}"
            )
        optimizer.step(model.params)
        if step % config.log_every == 0 or step == config.steps - 1:
            curve.append({"step": step, "loss": float(mean_loss)})
    return model, curve

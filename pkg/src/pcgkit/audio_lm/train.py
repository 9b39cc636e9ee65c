"""Adapter fine-tuning on multiple-choice items.

Supervision covers only the serialized answer span; the frozen base
weights never move (their checksums are asserted in tests). Batch
composition is stateless in (seed, step) so interrupted runs resume on
the identical trajectory.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ..dsp import FrontendConfig, prep_patches
from ..errors import NumericError, UsageError
from ..ingest.records import PCGRecording
from ..nn.optim import make_optimizer
from ..util import derive_seed
from .loss import next_token_loss
from .lora import DEFAULT_TARGETS
from .model import AudioLM
from .prompts import training_tokens
from .tokenizer import TokenSequence

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class LMTrainConfig:
    lr: float = 1e-3
    steps: int = 500
    batch: int = 4
    seed: int = 0
    rank: int = 8
    alpha: float = 16.0
    targets: tuple[str, ...] = DEFAULT_TARGETS
    train_projector: bool = True
    optimizer: str = "adam"
    log_every: int = 20


def prepare_examples(
    model: AudioLM,
    dataset: list[tuple[PCGRecording, object]],
    frontend: FrontendConfig,
) -> list[dict]:
    """Tokenize every item and cache one patch sequence per recording."""
    patch_cache: dict[str, object] = {}
    examples = []
    for recording, item in dataset:
        if recording.recording_id not in patch_cache:
            patch_cache[recording.recording_id] = prep_patches(recording, frontend)
        tokens, mask = training_tokens(
            model.tokenizer, item.question, item.options, item.gold_index
        )
        examples.append(
            {
                "patches": patch_cache[recording.recording_id],
                "tokens": tokens,
                "mask": mask,
                "item": item,
            }
        )
    return examples


def finetune(
    model: AudioLM,
    dataset: list[tuple[PCGRecording, object]],
    config: LMTrainConfig = LMTrainConfig(),
    frontend: FrontendConfig = FrontendConfig(),
    optimizer=None,
    start_step: int = 0,
) -> tuple[AudioLM, list[dict]]:
    """Train adapter (and optionally projector) parameters; returns
    (model, loss curve)."""
    if not dataset:
        raise UsageError("finetune needs a non-empty dataset")
    if not model.adapters:
        raise UsageError("finetune requires a LoRA-wrapped model (call lora_wrap first)")
    if config.train_projector:
        model.params["proj.w"].trainable = True
        model.params["proj.b"].trainable = True
    if optimizer is None:
        optimizer = make_optimizer(config.optimizer, config.lr)

    examples = prepare_examples(model, dataset, frontend)
    trainable = {n: p for n, p in model.params.items() if p.trainable}
    last_good = {n: p.value.copy() for n, p in trainable.items()}

    curve: list[dict] = []
    for step in range(start_step, config.steps):
        rng = np.random.default_rng(derive_seed(config.seed, "lm-batch", step))
        idx = rng.choice(
            len(examples), size=config.batch, replace=len(examples) < config.batch
        )
        model.store.zero_grads()
        total = 0.0
        for i in idx:
            ex = examples[i]
            loss = next_token_loss(
                model, ex["patches"], ex["tokens"], ex["mask"], compute_grads=True
            )
            total += loss
        mean_loss = total / config.batch
        if not np.isfinite(mean_loss):
            for name, value in last_good.items():
                model.params[name].value = value.copy()
            raise NumericError(
                f"fine-tuning diverged (loss={mean_loss}) at step {step}; "
                "trainable parameters restored to the last finite state"
            )
        # gradients were accumulated per item; scale to the batch mean
        for p in trainable.values():
            if p.grad is not None:
                p.grad /= config.batch
        last_good = {n: p.value.copy() for n, p in trainable.items()}
        optimizer.step(model.params)
        if step % config.log_every == 0 or step == config.steps - 1:
            curve.append({"step": step, "loss": float(mean_loss)})
    return model, curve


def loss_on_example(model: AudioLM, patches, tokens: TokenSequence, mask) -> float:
    return next_token_loss(model, patches, tokens, mask, compute_grads=False)

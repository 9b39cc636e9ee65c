"""Next-token objective over the answer span.

The loss is the mean negative log-probability of each supervised token
given the audio prefix and all preceding text; unsupervised positions
(the question and options) are context only.
"""

from __future__ import annotations

import numpy as np

from ..dsp import PatchSequence
from ..errors import UsageError
from ..nn import functional as F
from .model import AudioLM
from .tokenizer import TokenSequence, check_ids


def _validate(model: AudioLM, tokens: TokenSequence, supervise_mask) -> np.ndarray:
    mask = np.asarray(supervise_mask, dtype=bool)
    if mask.shape != (len(tokens),):
        raise UsageError(
            f"supervise_mask length {mask.shape} must match token count {len(tokens)}"
        )
    if not mask.any():
        raise UsageError("next_token_loss needs at least one supervised position")
    check_ids(tokens.ids, model.config.vocab_size)
    return mask


def next_token_loss(
    model: AudioLM,
    patches: PatchSequence,
    tokens: TokenSequence,
    supervise_mask,
    compute_grads: bool = False,
) -> float:
    """Mean -log P(token_t | audio, tokens_<t) over supervised positions.

    With compute_grads=True one backward pass accumulates gradients for
    every trainable parameter (and adapter) in the model.
    """
    mask = _validate(model, tokens, supervise_mask)
    ids = np.asarray(tokens.ids, dtype=np.int64)
    logits, cache = model.next_token_logits(patches, ids)
    positions = np.flatnonzero(mask)
    losses, dlogit_rows = F.cross_entropy_rows(logits[positions], ids[positions])
    loss = float(losses.mean())
    if compute_grads:
        dlogits = np.zeros_like(logits)
        dlogits[positions] = dlogit_rows / len(positions)
        model.next_token_logits_backward(cache, dlogits)
    return loss

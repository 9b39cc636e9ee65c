"""Frame-level binary cross-entropy between predicted probabilities and
the ground-truth heartbeat mask."""

from __future__ import annotations

import numpy as np

from ..dsp import FrameMask
from ..errors import UsageError
from ..nn.functional import sigmoid
from .model import PROB_EPS, FrameProbabilities


def bce_loss(probs: FrameProbabilities, mask: FrameMask) -> float:
    """Mean of -[y log p + (1-y) log(1-p)] with p clamped to
    [1e-7, 1 - 1e-7]."""
    if len(probs) != len(mask):
        raise UsageError(
            f"probability/mask length mismatch: {len(probs)} vs {len(mask)}"
        )
    if len(probs) == 0:
        raise UsageError("bce_loss needs at least one frame")
    p = np.clip(np.asarray(probs.values, dtype=np.float64), PROB_EPS, 1.0 - PROB_EPS)
    y = mask.values
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log1p(-p)))


def bce_from_logits(logits: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    """Training path: loss and d(loss)/d(logits) in one pass.

    Matches bce_loss(clamp(sigmoid(logits)), target) exactly, including
    a zero gradient wherever the probability clamp is active.
    """
    if len(logits) != len(target):
        raise UsageError(f"logit/target length mismatch: {len(logits)} vs {len(target)}")
    p_raw = sigmoid(np.asarray(logits, dtype=np.float64))
    p = np.clip(p_raw, PROB_EPS, 1.0 - PROB_EPS)
    y = np.asarray(target, dtype=np.float64)
    loss = float(-np.mean(y * np.log(p) + (1.0 - y) * np.log1p(-p)))
    dp = -(y / p - (1.0 - y) / (1.0 - p)) / len(p)
    dp[(p_raw <= PROB_EPS) | (p_raw >= 1.0 - PROB_EPS)] = 0.0
    dlogits = dp * p_raw * (1.0 - p_raw)
    return loss, dlogits

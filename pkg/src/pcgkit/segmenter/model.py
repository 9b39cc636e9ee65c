"""Heartbeat/silence segmenter: bidirectional scan encoder with a linear
per-frame head.

Patches arrive at the patch rate (patch_time frames per patch); the head
emits patch_time logits per patch which are laid back onto the frame
grid and cropped to the true frame count, so the model always produces
exactly one probability per spectrogram frame.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..dsp import PatchSequence
from ..errors import UsageError
from ..nn.encoder import SequenceEncoder
from ..nn.functional import sigmoid
from ..nn.store import WeightStore

PROB_EPS = 1e-7


@dataclass(frozen=True)
class FrameProbabilities:
    """Per-frame heartbeat probabilities, strictly inside (0, 1)."""

    values: np.ndarray
    hop_s: float

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1:
            raise UsageError("frame probabilities must be 1-D")
        if not np.all((values > 0.0) & (values < 1.0)):
            raise UsageError("frame probabilities must lie strictly inside (0, 1)")
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class SegmenterHyperparams:
    width: int = 64
    layers: int = 2
    patch_shape: tuple[int, int] = (2, 64)

    def as_dict(self) -> dict:
        return {
            "width": self.width,
            "layers": self.layers,
            "patch_shape": list(self.patch_shape),
        }

    @staticmethod
    def from_dict(d: dict) -> "SegmenterHyperparams":
        return SegmenterHyperparams(
            width=int(d["width"]),
            layers=int(d["layers"]),
            patch_shape=tuple(d["patch_shape"]),
        )


class SegmenterModel:
    def __init__(self, hyper: SegmenterHyperparams = SegmenterHyperparams(), seed: int = 0):
        self.hyper = hyper
        self.store = WeightStore()
        rng = np.random.default_rng(seed)
        patch_dim = hyper.patch_shape[0] * hyper.patch_shape[1]
        self.encoder = SequenceEncoder(
            self.store, "enc", patch_dim, hyper.width, hyper.layers, rng
        )
        # zero-initialized head: an untrained model says 0.5 everywhere
        self.store.add("head.w", np.zeros((hyper.patch_shape[0], hyper.width)))
        self.store.add("head.b", np.zeros(hyper.patch_shape[0]))

    @property
    def params(self):
        return self.store.params

    def _check_patches(self, patches: PatchSequence) -> None:
        if tuple(patches.patch_shape) != tuple(self.hyper.patch_shape):
            raise UsageError(
                f"patch shape mismatch: model expects {self.hyper.patch_shape}, "
                f"got {tuple(patches.patch_shape)}"
            )
        spans = patches.frame_span
        if any(spans[i][0] >= spans[i + 1][0] for i in range(len(spans) - 1)):
            raise UsageError(
                "segmenter requires one patch per time block (full-mel patches)"
            )

    def forward_logits(self, patches: PatchSequence):
        """Per-frame logits plus the caches needed for backward."""
        self._check_patches(patches)
        h, enc_cache = self.encoder.forward(self.store, patches.patches)
        logits_per_patch = h @ self.store.w("head.w").T + self.store.w("head.b")
        n_frames = patches.n_frames
        frame_logits = logits_per_patch.reshape(-1)[:n_frames]
        return frame_logits, (h, enc_cache, logits_per_patch.shape)

    def backward_from_logits(self, patches: PatchSequence, cache, dlogits: np.ndarray) -> None:
        h, enc_cache, patch_logit_shape = cache
        padded = np.zeros(patch_logit_shape[0] * patch_logit_shape[1])
        padded[: len(dlogits)] = dlogits
        d_patch_logits = padded.reshape(patch_logit_shape)
        self.store.grad_w("head.w", d_patch_logits.T @ h)
        self.store.grad_w("head.b", d_patch_logits.sum(axis=0))
        dh = d_patch_logits @ self.store.w("head.w")
        self.encoder.backward(self.store, enc_cache, dh)


def probabilities_from_logits(logits: np.ndarray, hop_s: float) -> FrameProbabilities:
    values = np.clip(sigmoid(logits), PROB_EPS, 1.0 - PROB_EPS)
    return FrameProbabilities(values=values, hop_s=hop_s)


def seg_forward(model: SegmenterModel, patches: PatchSequence) -> FrameProbabilities:
    """Inference: one probability per source spectrogram frame."""
    logits, _ = model.forward_logits(patches)
    return probabilities_from_logits(logits, patches.hop_s)

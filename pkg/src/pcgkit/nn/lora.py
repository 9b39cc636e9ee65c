"""Low-rank adapter algebra: a frozen base matrix plus learnable factors.

The effective weight is base + (alpha / rank) * B @ A with A of shape
(rank, d_in) and B of shape (d_out, rank). B starts at zero so a freshly
wrapped model computes exactly what the unwrapped model did.
"""

from __future__ import annotations

import numpy as np

from ..errors import UsageError
from .params import Param


class LoRAAdapter:
    __slots__ = ("base", "A", "B", "rank", "alpha")

    def __init__(self, base: Param, rank: int, alpha: float, rng: np.random.Generator):
        if rank < 1:
            raise UsageError(f"adapter rank must be >= 1, got {rank}")
        if base.value.ndim != 2:
            raise UsageError(f"can only adapt 2-D weights, got shape {base.value.shape}")
        d_out, d_in = base.value.shape
        self.base = base
        self.rank = int(rank)
        self.alpha = float(alpha)
        # small-variance init for A, zeros for B: identity at wrap time
        self.A = Param(rng.standard_normal((rank, d_in)) * (1.0 / np.sqrt(d_in)),
                       name=f"{base.name}.lora_A")
        self.B = Param(np.zeros((d_out, rank)), name=f"{base.name}.lora_B")

    @property
    def scale(self) -> float:
        return self.alpha / self.rank

    def effective(self) -> np.ndarray:
        return self.base.value + self.scale * (self.B.value @ self.A.value)

    def accumulate(self, d_eff: np.ndarray) -> None:
        """Route the gradient w.r.t. the effective weight into A and B."""
        self.A.add_grad(self.scale * (self.B.value.T @ d_eff))
        self.B.add_grad(self.scale * (d_eff @ self.A.value.T))

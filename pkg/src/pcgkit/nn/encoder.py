"""Bidirectional recurrent sequence encoder over patch vectors.

Each layer runs the tanh scan kernel over the sequence in both
directions and sums the two outputs, so every position's embedding sees
the whole sequence. The scan itself dispatches to the compiled kernel
when available.
"""

from __future__ import annotations

import numpy as np

from .. import _kernels
from ..errors import UsageError
from .store import WeightStore


class BiScanLayer:
    def __init__(
        self,
        store: WeightStore,
        prefix: str,
        in_dim: int,
        width: int,
        rng: np.random.Generator,
    ):
        self.prefix = prefix
        self.width = width
        w_std = 1.0 / np.sqrt(in_dim)
        u_std = 0.5 / np.sqrt(width)
        for direction in ("fwd", "bwd"):
            store.add(f"{prefix}.{direction}.w", rng.standard_normal((width, in_dim)) * w_std)
            store.add(f"{prefix}.{direction}.b", np.zeros(width))
            store.add(f"{prefix}.{direction}.u", rng.standard_normal((width, width)) * u_std)

    def forward(self, store: WeightStore, x: np.ndarray):
        h0 = np.zeros(self.width)
        pre_f = x @ store.w(f"{self.prefix}.fwd.w").T + store.w(f"{self.prefix}.fwd.b")
        h_f = _kernels.scan_forward(pre_f, store.w(f"{self.prefix}.fwd.u"), h0)

        x_rev = x[::-1]
        pre_b = x_rev @ store.w(f"{self.prefix}.bwd.w").T + store.w(f"{self.prefix}.bwd.b")
        h_b = _kernels.scan_forward(pre_b, store.w(f"{self.prefix}.bwd.u"), h0)

        y = h_f + h_b[::-1]
        cache = (x, x_rev, h_f, h_b, h0)
        return y, cache

    def backward(self, store: WeightStore, cache, dy: np.ndarray) -> np.ndarray:
        x, x_rev, h_f, h_b, h0 = cache
        dx = np.zeros_like(x)
        for direction, h, x_dir, dh in (
            ("fwd", h_f, x, dy),
            ("bwd", h_b, x_rev, dy[::-1]),
        ):
            u = store.w(f"{self.prefix}.{direction}.u")
            dpre, du, _ = _kernels.scan_backward(
                u, h, h0, np.ascontiguousarray(dh)
            )
            store.grad_w(f"{self.prefix}.{direction}.u", du)
            store.grad_w(f"{self.prefix}.{direction}.w", dpre.T @ x_dir)
            store.grad_w(f"{self.prefix}.{direction}.b", dpre.sum(axis=0))
            dx_dir = dpre @ store.w(f"{self.prefix}.{direction}.w")
            dx += dx_dir if direction == "fwd" else dx_dir[::-1]
        return dx


class SequenceEncoder:
    """Patch embedding followed by stacked bidirectional scan layers.

    Input sequences are standardized by their own mean/std (treated as
    constants w.r.t. gradients) so recordings with very different noise
    floors land in a comparable range.
    """

    def __init__(
        self,
        store: WeightStore,
        prefix: str,
        in_dim: int,
        width: int,
        n_layers: int,
        rng: np.random.Generator,
        normalize_input: bool = True,
    ):
        if n_layers < 1:
            raise UsageError("encoder needs at least one layer")
        self.prefix = prefix
        self.in_dim = in_dim
        self.width = width
        self.normalize_input = normalize_input
        store.add(f"{prefix}.embed.w", rng.standard_normal((width, in_dim)) / np.sqrt(in_dim))
        store.add(f"{prefix}.embed.b", np.zeros(width))
        self.layers = [
            BiScanLayer(store, f"{prefix}.l{i}", width, width, rng) for i in range(n_layers)
        ]

    def forward(self, store: WeightStore, x: np.ndarray):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.in_dim:
            raise UsageError(
                f"encoder {self.prefix!r} expects (*, {self.in_dim}) input, got {x.shape}"
            )
        if self.normalize_input:
            x = (x - x.mean()) / (x.std() + 1e-8)
        h = x @ store.w(f"{self.prefix}.embed.w").T + store.w(f"{self.prefix}.embed.b")
        caches = [x]
        for layer in self.layers:
            h, cache = layer.forward(store, h)
            caches.append(cache)
        return h, caches

    def backward(self, store: WeightStore, caches, dy: np.ndarray) -> None:
        for i in range(len(self.layers) - 1, -1, -1):
            dy = self.layers[i].backward(store, caches[i + 1], dy)
        x = caches[0]
        store.grad_w(f"{self.prefix}.embed.w", dy.T @ x)
        store.grad_w(f"{self.prefix}.embed.b", dy.sum(axis=0))

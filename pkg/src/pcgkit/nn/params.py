"""Named float64 parameters with explicitly accumulated gradients."""

from __future__ import annotations

import hashlib

import numpy as np


class Param:
    """A trainable (or frozen) tensor plus its accumulated gradient."""

    __slots__ = ("name", "value", "grad", "trainable")

    def __init__(self, value: np.ndarray, name: str = "", trainable: bool = True):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.name = name
        self.trainable = trainable

    def add_grad(self, g: np.ndarray) -> None:
        if not self.trainable:
            return
        if self.grad is None:
            self.grad = np.zeros_like(self.value)
        self.grad += g

    def zero_grad(self) -> None:
        self.grad = None

    @property
    def size(self) -> int:
        return int(self.value.size)

    def __repr__(self) -> str:
        flag = "" if self.trainable else ", frozen"
        return f"Param({self.name!r}, shape={self.value.shape}{flag})"


def init_normal(rng: np.random.Generator, shape: tuple[int, ...], std: float) -> np.ndarray:
    return rng.standard_normal(shape) * std


def checksum(params: dict[str, Param], only_frozen: bool = False) -> str:
    """sha256 over parameter bytes in name order; detects any mutation."""
    h = hashlib.sha256()
    for name in sorted(params):
        p = params[name]
        if only_frozen and p.trainable:
            continue
        h.update(name.encode("utf-8"))
        h.update(np.ascontiguousarray(p.value).tobytes())
    return h.hexdigest()


def trainable_count(params: dict[str, Param]) -> int:
    return sum(p.size for p in params.values() if p.trainable)

"""Deterministic optimizers over named parameter dicts."""

from __future__ import annotations

import numpy as np

from ..errors import UsageError
from .params import Param


class SGD:
    """Plain stochastic gradient descent with a fixed learning rate."""

    def __init__(self, lr: float):
        self.lr = float(lr)

    def step(self, params: dict[str, Param]) -> None:
        for name in sorted(params):
            p = params[name]
            if p.trainable and p.grad is not None:
                p.value -= self.lr * p.grad

    def state_dict(self) -> dict:
        return {"kind": "sgd", "t": 0}

    def state_tensors(self) -> dict[str, np.ndarray]:
        return {}

    def load_state(self, meta: dict, tensors: dict[str, np.ndarray]) -> None:
        pass


class Adam:
    def __init__(self, lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr = float(lr)
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.t = 0
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}

    def step(self, params: dict[str, Param]) -> None:
        self.t += 1
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        for name in sorted(params):
            p = params[name]
            if not p.trainable or p.grad is None:
                continue
            m = self.m.setdefault(name, np.zeros_like(p.value))
            v = self.v.setdefault(name, np.zeros_like(p.value))
            m *= self.beta1
            m += (1.0 - self.beta1) * p.grad
            v *= self.beta2
            v += (1.0 - self.beta2) * p.grad**2
            p.value -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)

    def state_dict(self) -> dict:
        return {"kind": "adam", "t": self.t}

    def state_tensors(self) -> dict[str, np.ndarray]:
        out = {}
        for name in sorted(self.m):
            out[f"opt.m.{name}"] = self.m[name]
            out[f"opt.v.{name}"] = self.v[name]
        return out

    def load_state(self, meta: dict, tensors: dict[str, np.ndarray]) -> None:
        self.t = int(meta["t"])
        for key, arr in tensors.items():
            if key.startswith("opt.m."):
                self.m[key[len("opt.m."):]] = arr.copy()
            elif key.startswith("opt.v."):
                self.v[key[len("opt.v."):]] = arr.copy()


def make_optimizer(kind: str, lr: float):
    if kind == "sgd":
        return SGD(lr)
    if kind == "adam":
        return Adam(lr)
    raise UsageError(f"unknown optimizer {kind!r} (expected 'sgd' or 'adam')")

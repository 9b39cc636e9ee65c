"""Registry of named weights with optional low-rank adapters.

Model code asks the store for effective weight values and pushes
gradients back by name; whether a weight is dense or adapted is
invisible to the math. This is what lets one forward/backward
implementation serve both the plain and the LoRA-wrapped model.
"""

from __future__ import annotations

import numpy as np

from ..errors import UsageError
from .lora import LoRAAdapter
from .params import Param


class WeightStore:
    def __init__(self):
        self.params: dict[str, Param] = {}
        self.adapters: dict[str, LoRAAdapter] = {}

    def add(self, name: str, value: np.ndarray, trainable: bool = True) -> Param:
        if name in self.params:
            raise UsageError(f"duplicate parameter name {name!r}")
        p = Param(value, name=name, trainable=trainable)
        self.params[name] = p
        return p

    def w(self, name: str) -> np.ndarray:
        adapter = self.adapters.get(name)
        return adapter.effective() if adapter is not None else self.params[name].value

    def grad_w(self, name: str, d_eff: np.ndarray) -> None:
        adapter = self.adapters.get(name)
        if adapter is not None:
            adapter.accumulate(d_eff)
        else:
            self.params[name].add_grad(d_eff)

    def attach_adapter(self, name: str, rank: int, alpha: float, rng) -> LoRAAdapter:
        if name in self.adapters:
            raise UsageError(f"{name!r} already has an adapter")
        base = self.params[name]
        adapter = LoRAAdapter(base, rank, alpha, rng)
        base.trainable = False
        self.params[adapter.A.name] = adapter.A
        self.params[adapter.B.name] = adapter.B
        self.adapters[name] = adapter
        return adapter

    def merge_adapter(self, name: str) -> None:
        adapter = self.adapters.pop(name)
        adapter.base.value = adapter.effective()
        del self.params[adapter.A.name]
        del self.params[adapter.B.name]

    def zero_grads(self) -> None:
        for p in self.params.values():
            p.zero_grad()

"""Central finite-difference verification of analytic gradients.

The checker treats the model as a black box: a loss callable plus the
parameter dict. Analytic gradients come from one backward pass; each
checked coordinate is then perturbed by +/-step and the symmetric
difference quotient compared against the stored gradient.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .params import Param


def finite_difference_check(
    loss_fn: Callable[[bool], float],
    params: dict[str, Param],
    step: float = 1e-5,
    coord_limit: int | None = None,
    seed: int = 0,
    grad_floor: float = 1e-6,
) -> dict:
    """Compare analytic gradients with central differences.

    loss_fn(compute_grads) must return the scalar loss; when called with
    True it must also accumulate gradients into the params. Relative
    error uses max(|analytic|, |numeric|, grad_floor) as denominator so
    coordinates with negligible gradient cannot dominate.
    """
    for p in params.values():
        p.zero_grad()
    loss_fn(True)
    analytic = {
        name: (p.grad.copy() if p.grad is not None else np.zeros_like(p.value))
        for name, p in params.items()
        if p.trainable
    }

    rng = np.random.default_rng(seed)
    worst = {"max_rel_error": 0.0, "param": None, "coord": None, "n_checked": 0}
    for name in sorted(analytic):
        p = params[name]
        size = p.value.size
        if coord_limit is not None and size > coord_limit:
            coords = np.sort(rng.choice(size, size=coord_limit, replace=False))
        else:
            coords = np.arange(size)
        flat = p.value.reshape(-1)
        for i in coords:
            orig = flat[i]
            flat[i] = orig + step
            loss_plus = loss_fn(False)
            flat[i] = orig - step
            loss_minus = loss_fn(False)
            flat[i] = orig
            numeric = (loss_plus - loss_minus) / (2.0 * step)
            a = analytic[name].reshape(-1)[i]
            rel = abs(a - numeric) / max(abs(a), abs(numeric), grad_floor)
            worst["n_checked"] += 1
            if rel > worst["max_rel_error"]:
                worst.update(max_rel_error=float(rel), param=name, coord=int(i))
    return worst

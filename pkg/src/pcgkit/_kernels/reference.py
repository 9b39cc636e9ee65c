"""Pure-numpy recurrent scan, the fallback for the compiled kernel.

The scan is the only sequential hot loop in the package: one tanh
recurrence step per time frame, in each direction, in every encoder
layer. Both backends implement the same recurrence

    h[t] = tanh(x[t] + h[t-1] @ u)

and its reverse-mode derivative, so they are interchangeable.
"""

from __future__ import annotations

import numpy as np

NAME = "numpy"


def scan_forward(x: np.ndarray, u: np.ndarray, h0: np.ndarray) -> np.ndarray:
    """Run the recurrence over x (T, H); returns all hidden states (T, H)."""
    steps, width = x.shape
    h = np.empty((steps, width))
    prev = h0
    for t in range(steps):
        prev = np.tanh(x[t] + prev @ u)
        h[t] = prev
    return h


def scan_backward(
    u: np.ndarray, h: np.ndarray, h0: np.ndarray, dh: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Backprop through time.

    Given upstream gradients dh w.r.t. every hidden state, returns
    (dx, du, dh0) for the scan_forward inputs.
    """
    steps, width = h.shape
    dx = np.empty((steps, width))
    du = np.zeros((width, width))
    carry = np.zeros(width)
    for t in range(steps - 1, -1, -1):
        da = (dh[t] + carry) * (1.0 - h[t] * h[t])
        dx[t] = da
        prev = h[t - 1] if t > 0 else h0
        du += np.outer(prev, da)
        carry = da @ u.T
    return dx, du, carry

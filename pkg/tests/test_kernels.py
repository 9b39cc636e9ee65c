"""Compiled scan kernel vs the numpy reference, plus direct gradient checks."""

import numpy as np
import pytest

from pcgkit import _kernels
from pcgkit._kernels import reference


def _random_case(seed, steps=40, width=12):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((steps, width))
    u = rng.standard_normal((width, width)) * 0.3
    h0 = rng.standard_normal(width)
    dh = rng.standard_normal((steps, width))
    return x, u, h0, dh


compiled = pytest.mark.skipif(
    _kernels.BACKEND != "cython", reason="compiled kernel not built"
)


@compiled
class TestBackendEquivalence:
    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_forward_matches_reference(self, seed):
        x, u, h0, _ = _random_case(seed)
        np.testing.assert_allclose(
            _kernels.scan_forward(x, u, h0), reference.scan_forward(x, u, h0),
            rtol=0, atol=1e-12,
        )

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_backward_matches_reference(self, seed):
        x, u, h0, dh = _random_case(seed)
        h = reference.scan_forward(x, u, h0)
        got = _kernels.scan_backward(u, np.ascontiguousarray(h), h0, dh)
        want = reference.scan_backward(u, h, h0, dh)
        for g, w in zip(got, want):
            np.testing.assert_allclose(g, w, rtol=0, atol=1e-12)


class TestScanGradients:
    def test_backward_matches_finite_differences(self):
        x, u, h0, _ = _random_case(7, steps=6, width=4)
        rng = np.random.default_rng(8)
        weight = rng.standard_normal((6, 4))

        def loss(x_, u_, h0_):
            return float((reference.scan_forward(x_, u_, h0_) * weight).sum())

        h = reference.scan_forward(x, u, h0)
        dx, du, dh0 = reference.scan_backward(u, h, h0, weight)

        step = 1e-6
        for arr, grad in ((x, dx), (u, du), (h0, dh0)):
            flat, gflat = arr.reshape(-1), grad.reshape(-1)
            for i in range(flat.size):
                orig = flat[i]
                flat[i] = orig + step
                lp = loss(x, u, h0)
                flat[i] = orig - step
                lm = loss(x, u, h0)
                flat[i] = orig
                numeric = (lp - lm) / (2 * step)
                assert abs(numeric - gflat[i]) <= 1e-5 * max(1.0, abs(gflat[i]))

    def test_recurrence_definition(self):
        # h[t] must equal tanh(x[t] + h[t-1] @ u), checked directly
        x, u, h0, _ = _random_case(3, steps=5, width=3)
        h = reference.scan_forward(x, u, h0)
        prev = h0
        for t in range(5):
            np.testing.assert_allclose(h[t], np.tanh(x[t] + prev @ u), atol=1e-15)
            prev = h[t]


def test_backend_name_reported():
    assert _kernels.BACKEND in ("cython", "numpy")

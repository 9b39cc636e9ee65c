"""Backend selection for the recurrent-scan hot kernel.

Prefers the compiled Cython extension; falls back to the numpy
reference implementation when the extension was not built or when
PCGKIT_FORCE_NUMPY=1 is set (useful for benchmarking and debugging).
"""

from __future__ import annotations

import os

from . import reference

if os.environ.get("PCGKIT_FORCE_NUMPY", "") not in ("", "0"):
    _backend = reference
else:
    try:
        from . import _scan as _backend  # type: ignore[attr-defined]
    except ImportError:
        _backend = reference

BACKEND = _backend.NAME
scan_forward = _backend.scan_forward
scan_backward = _backend.scan_backward

__all__ = ["BACKEND", "scan_forward", "scan_backward", "reference"]

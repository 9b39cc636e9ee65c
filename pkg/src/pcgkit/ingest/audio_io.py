"""Thin wav helpers: 16-bit PCM on disk, float64 in [-1, 1] in memory."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from scipy.io import wavfile

from ..errors import DataError


def read_wav(path: str | Path) -> tuple[int, np.ndarray]:
    try:
        rate, data = wavfile.read(path)
    except (ValueError, OSError) as exc:
        raise DataError(f"{path}: cannot read wav ({exc})") from exc
    if data.ndim > 1:
        data = data[:, 0]
    if data.dtype == np.int16:
        samples = data.astype(np.float64) / 32768.0
    elif data.dtype == np.int32:
        samples = data.astype(np.float64) / 2147483648.0
    elif data.dtype == np.uint8:
        samples = (data.astype(np.float64) - 128.0) / 128.0
    else:
        samples = np.asarray(data, dtype=np.float64)
    return int(rate), samples


def write_wav(path: str | Path, rate: int, samples: np.ndarray) -> None:
    clipped = np.clip(np.asarray(samples, dtype=np.float64), -1.0, 1.0)
    wavfile.write(path, rate, (clipped * 32767.0).astype(np.int16))

"""Signal front-end: resampling, log-mel spectrograms, patch sequences,
and rasterization of second-domain intervals onto the frame grid.

All functions are pure; spectrogram parameters travel with checkpoints
so inference always matches training.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import gcd

import numpy as np
from scipy.signal import resample_poly

from .errors import DataError
from .ingest.records import HEARTBEAT_STATES, SegmentIntervals


@dataclass(frozen=True)
class SpectrogramParams:
    n_fft: int = 512
    hop: int = 160
    n_mels: int = 64
    floor: float = 1e-10

    def as_dict(self) -> dict:
        return {
            "n_fft": self.n_fft,
            "hop": self.hop,
            "n_mels": self.n_mels,
            "floor": self.floor,
        }


@dataclass(frozen=True)
class Spectrogram:
    """Log-magnitude mel frames, time-major (n_frames, n_mels)."""

    frames: np.ndarray
    hop_s: float
    n_mels: int
    source_rate: int

    def __post_init__(self):
        frames = np.asarray(self.frames, dtype=np.float64)
        if frames.ndim != 2 or frames.shape[0] < 1 or frames.shape[1] != self.n_mels:
            raise DataError(f"bad spectrogram shape {frames.shape} for n_mels={self.n_mels}")
        if self.hop_s <= 0:
            raise DataError("hop_s must be positive")
        if not np.all(np.isfinite(frames)):
            raise DataError("spectrogram contains non-finite entries")
        object.__setattr__(self, "frames", frames)

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]


@dataclass(frozen=True)
class PatchSequence:
    """Flattened patches tiling a spectrogram in time order.

    The trailing partial patch is zero-padded; frame_span records the
    actual (first_frame, last_frame) each patch covers so per-frame
    outputs can be cropped back to the source grid.
    """

    patches: np.ndarray
    patch_shape: tuple[int, int]
    frame_span: tuple[tuple[int, int], ...]
    hop_s: float

    @property
    def n_patches(self) -> int:
        return self.patches.shape[0]

    @property
    def n_frames(self) -> int:
        return self.frame_span[-1][1] + 1 if self.frame_span else 0


@dataclass(frozen=True)
class FrameMask:
    """Binary per-frame labels: 1 = heartbeat occurrence, 0 = silence."""

    values: np.ndarray
    hop_s: float

    def __post_init__(self):
        values = np.asarray(self.values)
        if values.ndim != 1:
            raise DataError("frame mask must be 1-D")
        if not np.all((values == 0) | (values == 1)):
            raise DataError("frame mask entries must be 0 or 1")
        object.__setattr__(self, "values", values.astype(np.float64))

    def __len__(self) -> int:
        return len(self.values)


def resample(samples: np.ndarray, from_rate: int, to_rate: int) -> np.ndarray:
    """Polyphase band-limited resampling; identity when rates are equal.

    The output length is always round(len * to_rate / from_rate); the
    polyphase result is cropped or zero-padded by at most one sample to
    meet it.
    """
    if from_rate <= 0 or to_rate <= 0:
        raise DataError("sample rates must be positive")
    samples = np.asarray(samples, dtype=np.float64)
    if from_rate == to_rate:
        return samples.copy()
    g = gcd(int(from_rate), int(to_rate))
    # kaiser beta 12: flat enough passband for a <=1e-3 up/down round trip
    out = resample_poly(samples, int(to_rate) // g, int(from_rate) // g, window=("kaiser", 12.0))
    n_target = int(round(len(samples) * to_rate / from_rate))
    if len(out) > n_target:
        out = out[:n_target]
    elif len(out) < n_target:
        out = np.pad(out, (0, n_target - len(out)))
    return out


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(
    n_mels: int, n_fft: int, rate: int, fmin: float = 0.0, fmax: float | None = None
) -> np.ndarray:
    """Triangular unit-peak mel filters, shape (n_mels, n_fft//2 + 1)."""
    fmax = rate / 2.0 if fmax is None else fmax
    mel_points = np.linspace(hz_to_mel(fmin), hz_to_mel(fmax), n_mels + 2)
    hz_points = mel_to_hz(mel_points)
    bin_freqs = np.fft.rfftfreq(n_fft, d=1.0 / rate)
    fb = np.zeros((n_mels, len(bin_freqs)))
    for m in range(n_mels):
        left, center, right = hz_points[m : m + 3]
        rising = (bin_freqs - left) / max(center - left, 1e-12)
        falling = (right - bin_freqs) / max(right - center, 1e-12)
        fb[m] = np.clip(np.minimum(rising, falling), 0.0, None)
    return fb


def mel_center_frequencies(
    n_mels: int, rate: int, fmin: float = 0.0, fmax: float | None = None
) -> np.ndarray:
    fmax = rate / 2.0 if fmax is None else fmax
    mel_points = np.linspace(hz_to_mel(fmin), hz_to_mel(fmax), n_mels + 2)
    return mel_to_hz(mel_points[1:-1])


def log_mel(
    samples: np.ndarray, rate: int, params: SpectrogramParams = SpectrogramParams()
) -> Spectrogram:
    """frames = log(mel_filterbank @ |STFT|^2 + floor)."""
    samples = np.asarray(samples, dtype=np.float64)
    if len(samples) < params.n_fft:
        raise DataError(
            f"signal of {len(samples)} samples is shorter than one "
            f"FFT window ({params.n_fft})"
        )
    frames_view = np.lib.stride_tricks.sliding_window_view(samples, params.n_fft)
    frames_view = frames_view[:: params.hop]
    window = np.hanning(params.n_fft)
    power = np.abs(np.fft.rfft(frames_view * window, axis=1)) ** 2
    fb = mel_filterbank(params.n_mels, params.n_fft, rate)
    mel_power = power @ fb.T
    return Spectrogram(
        frames=np.log(mel_power + params.floor),
        hop_s=params.hop / rate,
        n_mels=params.n_mels,
        source_rate=rate,
    )


def patchify(spec: Spectrogram, patch_shape: tuple[int, int] = (2, 64)) -> PatchSequence:
    """Tile the spectrogram into flattened (time x mel) patches.

    Time blocks run in order; when the patch mel size divides n_mels
    with more than one band, mel bands iterate inside each time block.
    Only the trailing time block is zero-padded.
    """
    pt, pm = patch_shape
    if pt < 1 or pm < 1:
        raise DataError("patch dimensions must be positive")
    if pm > spec.n_mels:
        raise DataError(f"patch mel size {pm} exceeds spectrogram n_mels {spec.n_mels}")
    if spec.n_mels % pm != 0:
        raise DataError(f"patch mel size {pm} must divide n_mels {spec.n_mels}")
    n_frames = spec.n_frames
    n_time_blocks = -(-n_frames // pt)
    n_mel_bands = spec.n_mels // pm

    padded = np.zeros((n_time_blocks * pt, spec.n_mels))
    padded[:n_frames] = spec.frames

    patches = []
    spans = []
    for b in range(n_time_blocks):
        first = b * pt
        last = min(first + pt, n_frames) - 1
        block = padded[first : first + pt]
        for band in range(n_mel_bands):
            patches.append(block[:, band * pm : (band + 1) * pm].ravel())
            spans.append((first, last))
    return PatchSequence(
        patches=np.asarray(patches),
        patch_shape=(pt, pm),
        frame_span=tuple(spans),
        hop_s=spec.hop_s,
    )


@dataclass(frozen=True)
class FrontendConfig:
    """Everything between raw audio and model input, bundled so training
    and inference always agree."""

    target_rate: int = 16000
    spectrogram: SpectrogramParams = SpectrogramParams()
    patch_shape: tuple[int, int] = (2, 64)

    def as_dict(self) -> dict:
        return {
            "target_rate": self.target_rate,
            "spectrogram": self.spectrogram.as_dict(),
            "patch_shape": list(self.patch_shape),
        }

    @staticmethod
    def from_dict(d: dict) -> "FrontendConfig":
        return FrontendConfig(
            target_rate=int(d["target_rate"]),
            spectrogram=SpectrogramParams(**d["spectrogram"]),
            patch_shape=tuple(d["patch_shape"]),
        )


def prep_patches(recording, frontend: FrontendConfig = FrontendConfig()) -> PatchSequence:
    """Raw recording -> resample -> log-mel -> patch sequence."""
    samples = resample(recording.samples, recording.sample_rate, frontend.target_rate)
    spec = log_mel(samples, frontend.target_rate, frontend.spectrogram)
    return patchify(spec, frontend.patch_shape)


def frame_labels(
    intervals: SegmentIntervals,
    n_frames: int,
    hop_s: float,
    mode: str = "broad",
) -> FrameMask:
    """Rasterize intervals: frame t is 1 iff its center lies inside any
    heartbeat-state interval.

    `broad` counts S1/systole/S2/diastole as heartbeat occurrence,
    `strict` only the S1/S2 sounds; `unlabeled` stretches always count
    as silence.
    """
    if mode not in HEARTBEAT_STATES:
        raise DataError(f"unknown rasterization mode {mode!r}")
    positive_states = HEARTBEAT_STATES[mode]
    centers = (np.arange(n_frames) + 0.5) * hop_s
    values = np.zeros(n_frames)
    for onset, offset, state in intervals:
        if state in positive_states:
            values[(centers >= onset) & (centers < offset)] = 1.0
    return FrameMask(values=values, hop_s=hop_s)

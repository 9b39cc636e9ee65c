"""Synthetic phonocardiogram generator with exact ground truth.

Each beat is an S1 tone burst, a quiet systolic gap (optionally carrying
a band-limited murmur), an S2 tone burst, and a diastolic gap (likewise
optionally carrying a murmur). The returned intervals are the
generator's own construction times for the S1/S2 bursts, so they are
exact segmentation ground truth; murmur content is described by the
returned annotation, not by the intervals.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DataError
from .records import MurmurAnnotation, PCGRecording, PhaseFeatures, SegmentIntervals

ENVELOPES = ("plateau", "diamond", "decrescendo", "crescendo")
TIMINGS = ("early", "mid", "late", "holo")

# Hann tone-burst center-frequency bands for the two heart sounds.
S1_BAND_HZ = (30.0, 60.0)
S2_BAND_HZ = (60.0, 100.0)

_TIMING_LABEL = {
    ("systolic", "early"): "Early-systolic",
    ("systolic", "mid"): "Mid-systolic",
    ("systolic", "late"): "Late-systolic",
    ("systolic", "holo"): "Holosystolic",
    ("diastolic", "early"): "Early-diastolic",
    ("diastolic", "mid"): "Mid-diastolic",
    ("diastolic", "late"): "Late-diastolic",
    ("diastolic", "holo"): "Holodiastolic",
}
_SHAPE_LABEL = {
    "plateau": "Plateau",
    "diamond": "Diamond",
    "decrescendo": "Decrescendo",
    "crescendo": "Crescendo",
}


@dataclass(frozen=True)
class MurmurSpec:
    """Murmur content for one phase of every synthesized beat."""

    phase: str = "systolic"
    band_hz: tuple[float, float] = (150.0, 350.0)
    shape: str = "plateau"
    rel_amplitude: float = 0.3
    timing: str = "mid"

    def __post_init__(self):
        if self.phase not in ("systolic", "diastolic"):
            raise DataError(f"murmur phase must be systolic/diastolic, got {self.phase!r}")
        if self.shape not in ENVELOPES:
            raise DataError(f"unknown murmur envelope {self.shape!r}")
        if self.timing not in TIMINGS:
            raise DataError(f"unknown murmur timing {self.timing!r}")
        lo, hi = self.band_hz
        if not 0 < lo < hi:
            raise DataError(f"murmur band must satisfy 0 < low < high, got {self.band_hz}")
        if self.rel_amplitude <= 0:
            raise DataError("murmur rel_amplitude must be positive")


@dataclass(frozen=True)
class SynthSpec:
    n_beats: int = 6
    beat_period_s: float = 0.8
    s1_dur_s: float = 0.12
    s2_dur_s: float = 0.10
    murmur: MurmurSpec | None = None
    noise_snr_db: float = 10.0
    seed: int = 0
    sample_rate: int = 4000
    systole_frac: float = 0.40

    def __post_init__(self):
        if self.n_beats < 1:
            raise DataError("n_beats must be at least 1")
        if min(self.beat_period_s, self.s1_dur_s, self.s2_dur_s) <= 0:
            raise DataError("all durations must be positive")
        if self.s1_dur_s + self.s2_dur_s >= self.beat_period_s:
            raise DataError("s1_dur_s + s2_dur_s must be less than beat_period_s")
        if not 0 < self.systole_frac < 1:
            raise DataError("systole_frac must be in (0, 1)")
        s2_end = self.systole_frac * self.beat_period_s + self.s2_dur_s
        if s2_end >= self.beat_period_s:
            raise DataError("S2 burst must end before the beat period")
        if self.s1_dur_s >= self.systole_frac * self.beat_period_s:
            raise DataError("S1 burst must end before the S2 onset")


def _tone_burst(rng: np.random.Generator, n: int, rate: int, band: tuple[float, float]):
    freq = rng.uniform(*band)
    t = np.arange(n) / rate
    window = np.hanning(n) if n > 1 else np.ones(n)
    return np.sin(2.0 * np.pi * freq * t) * window


def _band_noise(rng: np.random.Generator, n: int, rate: int, band: tuple[float, float]):
    """White noise brick-walled to [low, high] Hz in the frequency domain."""
    white = rng.standard_normal(n)
    spectrum = np.fft.rfft(white)
    freqs = np.fft.rfftfreq(n, d=1.0 / rate)
    spectrum[(freqs < band[0]) | (freqs > band[1])] = 0.0
    shaped = np.fft.irfft(spectrum, n)
    rms = np.sqrt(np.mean(shaped**2))
    return shaped / rms if rms > 0 else shaped


def _envelope(kind: str, n: int) -> np.ndarray:
    x = np.linspace(0.0, 1.0, n)
    if kind == "plateau":
        env = np.ones(n)
    elif kind == "diamond":
        env = 1.0 - np.abs(2.0 * x - 1.0)
    elif kind == "decrescendo":
        env = 1.0 - x
    else:  # crescendo
        env = x
    return env


def _murmur_span(gap: tuple[float, float], timing: str) -> tuple[float, float]:
    on, off = gap
    width = off - on
    if timing == "holo":
        return on + 0.10 * width, off - 0.10 * width
    if timing == "early":
        return on + 0.10 * width, on + 0.55 * width
    if timing == "late":
        return off - 0.55 * width, off - 0.10 * width
    return on + 0.25 * width, off - 0.25 * width  # mid


def murmur_annotation(spec: SynthSpec) -> MurmurAnnotation:
    """Expert-style labels implied by the murmur parameters."""
    m = spec.murmur
    if m is None:
        return MurmurAnnotation("Absent")
    lo, hi = m.band_hz
    center, width = (lo + hi) / 2.0, hi - lo
    grading = "I/VI" if m.rel_amplitude < 0.25 else "II/VI" if m.rel_amplitude < 0.5 else "III/VI"
    pitch = "Low" if center < 150 else "Medium" if center < 300 else "High"
    quality = "Musical" if width < 100 else "Blowing" if width < 250 else "Harsh"
    features = PhaseFeatures(
        timing=_TIMING_LABEL[(m.phase, m.timing)],
        shape=_SHAPE_LABEL[m.shape],
        grading=grading,
        pitch=pitch,
        quality=quality,
    )
    if m.phase == "systolic":
        return MurmurAnnotation("Present", systolic=features, murmur_audible=True)
    return MurmurAnnotation("Present", diastolic=features, murmur_audible=True)


def synthesize_pcg(
    spec: SynthSpec,
) -> tuple[PCGRecording, SegmentIntervals, MurmurAnnotation]:
    """Render one recording; bit-identical for equal specs."""
    rate = spec.sample_rate
    if spec.murmur is not None and spec.murmur.band_hz[1] > rate / 2.0:
        raise DataError(
            f"murmur band {spec.murmur.band_hz} exceeds Nyquist ({rate / 2.0:.0f} Hz)"
        )
    rng = np.random.default_rng(spec.seed)
    n_total = int(round(spec.n_beats * spec.beat_period_s * rate))
    clean = np.zeros(n_total)
    intervals: list[tuple[float, float, str]] = []

    s1_freq_band, s2_freq_band = S1_BAND_HZ, S2_BAND_HZ
    for beat in range(spec.n_beats):
        t0 = beat * spec.beat_period_s
        s1_on, s1_off = t0, t0 + spec.s1_dur_s
        s2_on = t0 + spec.systole_frac * spec.beat_period_s
        s2_off = s2_on + spec.s2_dur_s
        beat_end = t0 + spec.beat_period_s

        for on, off, state, band, amp in (
            (s1_on, s1_off, "S1", s1_freq_band, 1.0),
            (s2_on, s2_off, "S2", s2_freq_band, 0.8),
        ):
            i0, i1 = int(round(on * rate)), int(round(off * rate))
            clean[i0:i1] += amp * _tone_burst(rng, i1 - i0, rate, band)
            intervals.append((on, off, state))

        if spec.murmur is not None:
            gap = (s1_off, s2_on) if spec.murmur.phase == "systolic" else (s2_off, beat_end)
            m_on, m_off = _murmur_span(gap, spec.murmur.timing)
            i0, i1 = int(round(m_on * rate)), int(round(m_off * rate))
            if i1 > i0:
                noise = _band_noise(rng, i1 - i0, rate, spec.murmur.band_hz)
                clean[i0:i1] += spec.murmur.rel_amplitude * noise * _envelope(
                    spec.murmur.shape, i1 - i0
                )

    signal_power = np.mean(clean**2)
    noise_power = signal_power / (10.0 ** (spec.noise_snr_db / 10.0))
    samples = clean + rng.standard_normal(n_total) * np.sqrt(noise_power)
    peak = np.max(np.abs(samples))
    if peak > 0:
        samples = samples * (0.95 / peak)

    recording = PCGRecording(
        patient_id=f"synth{spec.seed:05d}",
        site="unknown",
        samples=samples,
        sample_rate=rate,
    )
    segs = SegmentIntervals(tuple(intervals))
    segs.check_within(recording.duration_s)
    return recording, segs, murmur_annotation(spec)

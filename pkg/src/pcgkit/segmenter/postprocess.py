"""Interval extraction from frame probabilities and audio gating.

mask_to_intervals applies hysteresis thresholding: an interval opens
when the probability reaches on_threshold and stays open until it drops
below off_threshold, so brief dips inside a heartbeat do not split it.
gate_audio is the front-end step before the language model: it keeps
only the detected-heartbeat samples (excise) or silences the rest
(zero).
"""

from __future__ import annotations

import logging

import numpy as np

from ..errors import UsageError
from ..ingest.records import PCGRecording, SegmentIntervals

log = logging.getLogger(__name__)


def mask_to_intervals(
    probs,
    on_threshold: float = 0.6,
    off_threshold: float = 0.4,
    min_dur_s: float = 0.03,
) -> SegmentIntervals:
    """Hysteresis thresholding of per-frame values into intervals.

    Accepts FrameProbabilities or an exact FrameMask (anything with
    .values and .hop_s). Output states are `unlabeled`: the binary
    segmenter does not name cardiac phases.
    """
    if not 0.0 < off_threshold <= on_threshold < 1.0:
        raise UsageError(
            f"thresholds must satisfy 0 < off <= on < 1, got on={on_threshold}, "
            f"off={off_threshold}"
        )
    values = np.asarray(probs.values, dtype=np.float64)
    hop_s = probs.hop_s
    intervals = []
    open_at: int | None = None
    for t, p in enumerate(values):
        if open_at is None:
            if p >= on_threshold:
                open_at = t
        elif p < off_threshold:
            intervals.append((open_at, t))
            open_at = None
    if open_at is not None:
        intervals.append((open_at, len(values)))
    kept = [
        (first * hop_s, last * hop_s, "unlabeled")
        for first, last in intervals
        if (last - first) * hop_s >= min_dur_s and last > first
    ]
    return SegmentIntervals(tuple(kept))


def gate_audio(
    recording: PCGRecording,
    intervals: SegmentIntervals,
    policy: str = "excise",
) -> PCGRecording:
    """Keep only heartbeat audio: `excise` concatenates the interval
    samples (shortening the clip), `zero` keeps the length and silences
    everything outside the intervals.

    With no intervals under `excise` the recording is returned unchanged
    (with a logged warning) rather than producing empty audio.
    """
    if policy not in ("excise", "zero"):
        raise UsageError(f"unknown gating policy {policy!r}")
    intervals.check_within(recording.duration_s, tol_s=1.0 / recording.sample_rate)
    rate = recording.sample_rate
    spans = [
        (int(round(on * rate)), min(int(round(off * rate)), len(recording.samples)))
        for on, off, _ in intervals
    ]
    spans = [(a, b) for a, b in spans if b > a]

    if policy == "excise":
        if not spans:
            log.warning(
                "gate_audio(excise): no intervals for %s; returning audio unchanged",
                recording.recording_id,
            )
            return recording
        gated = np.concatenate([recording.samples[a:b] for a, b in spans])
        return recording.with_samples(gated)

    kept = np.zeros_like(recording.samples)
    for a, b in spans:
        kept[a:b] = recording.samples[a:b]
    return recording.with_samples(kept)

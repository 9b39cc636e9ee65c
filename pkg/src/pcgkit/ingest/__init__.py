from .records import (
    FEATURE_NAMES,
    MURMUR_CLASSES,
    SITES,
    STATES,
    MurmurAnnotation,
    PCGRecording,
    PhaseFeatures,
    SegmentIntervals,
)
from .synth import SynthSpec, synthesize_pcg
from .circor import load_circor
from .binary import load_binary_dataset

__all__ = [
    "FEATURE_NAMES",
    "MURMUR_CLASSES",
    "SITES",
    "STATES",
    "MurmurAnnotation",
    "PCGRecording",
    "PhaseFeatures",
    "SegmentIntervals",
    "SynthSpec",
    "synthesize_pcg",
    "load_circor",
    "load_binary_dataset",
]

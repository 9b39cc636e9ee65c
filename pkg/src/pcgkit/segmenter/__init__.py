from .model import FrameProbabilities, SegmenterHyperparams, SegmenterModel, seg_forward
from .loss import bce_loss
from .postprocess import gate_audio, mask_to_intervals
from .train import SegTrainConfig, train_segmenter
from .checkpoint import SEG_FORMAT, load_segmenter, save_segmenter

__all__ = [
    "FrameProbabilities",
    "SegmenterHyperparams",
    "SegmenterModel",
    "seg_forward",
    "bce_loss",
    "gate_audio",
    "mask_to_intervals",
    "SegTrainConfig",
    "train_segmenter",
    "SEG_FORMAT",
    "load_segmenter",
    "save_segmenter",
]

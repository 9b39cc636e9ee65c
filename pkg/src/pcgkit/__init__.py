"""pcgkit: desk-scale phonocardiogram murmur-feature analysis.

Pipeline stages: synthetic/real PCG ingestion, log-mel front-end, a
trainable heartbeat/silence segmenter, an audio-conditioned causal
language model fine-tuned with low-rank adapters on multiple-choice
murmur questions, and an evaluation harness with weighted-accuracy and
zero-shot normal/abnormal metrics.
"""

__version__ = "0.1.0"

ARTIFACT_VERSION = f"pcgkit-{__version__}"

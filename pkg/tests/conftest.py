import numpy as np
import pytest

from pcgkit.audio_lm.model import AudioLM, LMConfig
from pcgkit.dsp import FrontendConfig, Spectrogram, patchify
from pcgkit.ingest.synth import MurmurSpec, SynthSpec, synthesize_pcg

# Small frontend shared by model-level tests: 4-mel bins keep forwards fast.
TINY_PATCH = (2, 4)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_patches(rng):
    spec = Spectrogram(
        frames=rng.standard_normal((10, 4)), hop_s=0.01, n_mels=4, source_rate=16000
    )
    return patchify(spec, TINY_PATCH)


def make_tiny_lm(seed=3, vocab=259, width=32, blocks=2, heads=2, max_len=768):
    return AudioLM(
        LMConfig(
            vocab_size=vocab,
            width=width,
            blocks=blocks,
            heads=heads,
            mlp_mult=2,
            max_len=max_len,
            enc_width=8,
            enc_layers=1,
            pool_stride=2,
            patch_shape=TINY_PATCH,
            seed=seed,
        )
    )


@pytest.fixture
def tiny_lm():
    return make_tiny_lm()


def synth_corpus_entries(n, snr_db=10.0, n_beats=4, base_seed=0):
    """In-memory synthetic recordings with varied murmur content."""
    shapes = ("plateau", "diamond", "decrescendo", "crescendo")
    timings = ("early", "mid", "late", "holo")
    entries = []
    for i in range(n):
        seed = base_seed + i
        murmur = None
        if i % 3 == 0:
            murmur = MurmurSpec(
                phase="systolic" if i % 6 else "diastolic",
                band_hz=(100.0 + (37 * i) % 200, 400.0 + (53 * i) % 450),
                shape=shapes[i % 4],
                rel_amplitude=0.15 + (i % 5) * 0.1,
                timing=timings[(i // 3) % 4],
            )
        entries.append(
            synthesize_pcg(
                SynthSpec(seed=seed, n_beats=n_beats, murmur=murmur, noise_snr_db=snr_db)
            )
        )
    return entries


@pytest.fixture(scope="session")
def frontend():
    return FrontendConfig()

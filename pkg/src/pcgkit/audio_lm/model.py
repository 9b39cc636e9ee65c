"""Audio-conditioned causal language model at desk scale.

A bidirectional scan encoder turns spectrogram patches into a sequence
of audio embeddings (optionally mean-pooled in time) which a projector
maps into the decoder width. The decoder is a small pre-norm transformer
that attends causally over [audio prefix || text tokens]; with the audio
first, causality already guarantees that audio positions never see text.

All forward passes cache what the hand-written backward passes need;
inference additionally supports incremental decoding with per-block
key/value caches so one shared prompt can score many continuations.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..dsp import PatchSequence
from ..errors import UsageError
from ..nn import functional as F
from ..nn.store import WeightStore
from ..util import derive_seed
from .tokenizer import VOCAB_SIZE, ByteTokenizer


@dataclass(frozen=True)
class LMConfig:
    vocab_size: int = VOCAB_SIZE
    width: int = 128
    blocks: int = 4
    heads: int = 4
    mlp_mult: int = 2
    max_len: int = 2048
    enc_width: int = 64
    enc_layers: int = 2
    pool_stride: int = 4
    patch_shape: tuple[int, int] = (2, 64)
    seed: int = 0

    def __post_init__(self):
        if self.width % self.heads != 0:
            raise UsageError(f"width {self.width} not divisible by heads {self.heads}")
        if self.pool_stride < 1:
            raise UsageError("pool_stride must be >= 1")

    def as_dict(self) -> dict:
        d = self.__dict__.copy()
        d["patch_shape"] = list(self.patch_shape)
        return d

    @staticmethod
    def from_dict(d: dict) -> "LMConfig":
        d = dict(d)
        d["patch_shape"] = tuple(d["patch_shape"])
        return LMConfig(**d)


@dataclass
class DecoderCache:
    """Per-block key/value tensors for incremental decoding."""

    keys: list[np.ndarray | None]
    values: list[np.ndarray | None]
    length: int = 0


class AudioLM:
    def __init__(self, config: LMConfig = LMConfig(), tokenizer: ByteTokenizer | None = None):
        self.config = config
        self.tokenizer = tokenizer or ByteTokenizer()
        self.store = WeightStore()
        rng = np.random.default_rng(derive_seed(config.seed, "lm-init"))
        c = config
        patch_dim = c.patch_shape[0] * c.patch_shape[1]

        from ..nn.encoder import SequenceEncoder

        self.encoder = SequenceEncoder(
            self.store, "enc", patch_dim, c.enc_width, c.enc_layers, rng
        )
        self.store.add("proj.w", rng.standard_normal((c.width, c.enc_width)) / np.sqrt(c.enc_width))
        self.store.add("proj.b", np.zeros(c.width))

        emb_std = 1.0 / np.sqrt(c.width)
        self.store.add("tok_emb", rng.standard_normal((c.vocab_size, c.width)) * emb_std)
        self.store.add("pos_emb", rng.standard_normal((c.max_len, c.width)) * 0.5 * emb_std)
        for i in range(c.blocks):
            p = f"dec.b{i}"
            self.store.add(f"{p}.ln1.g", np.ones(c.width))
            self.store.add(f"{p}.ln1.b", np.zeros(c.width))
            for mat in ("wq", "wk", "wv"):
                self.store.add(f"{p}.attn.{mat}", rng.standard_normal((c.width, c.width)) * emb_std)
            self.store.add(
                f"{p}.attn.wo",
                rng.standard_normal((c.width, c.width)) * emb_std / np.sqrt(2.0 * c.blocks),
            )
            self.store.add(f"{p}.ln2.g", np.ones(c.width))
            self.store.add(f"{p}.ln2.b", np.zeros(c.width))
            mlp_dim = c.mlp_mult * c.width
            self.store.add(f"{p}.mlp.w1", rng.standard_normal((mlp_dim, c.width)) * emb_std)
            self.store.add(f"{p}.mlp.b1", np.zeros(mlp_dim))
            self.store.add(
                f"{p}.mlp.w2",
                rng.standard_normal((c.width, mlp_dim)) * (1.0 / np.sqrt(mlp_dim)) / np.sqrt(2.0 * c.blocks),
            )
            self.store.add(f"{p}.mlp.b2", np.zeros(c.width))
        self.store.add("dec.lnf.g", np.ones(c.width))
        self.store.add("dec.lnf.b", np.zeros(c.width))
        self.store.add("head.w", rng.standard_normal((c.vocab_size, c.width)) * emb_std)

    @property
    def params(self):
        return self.store.params

    @property
    def adapters(self):
        return self.store.adapters

    # ------------------------------------------------------------ audio

    def _check_patches(self, patches: PatchSequence) -> None:
        if tuple(patches.patch_shape) != tuple(self.config.patch_shape):
            raise UsageError(
                f"patch shape mismatch: model expects {self.config.patch_shape}, "
                f"got {tuple(patches.patch_shape)}"
            )

    def encode_audio_cached(self, patches: PatchSequence):
        """Audio embeddings at decoder width plus the backward cache."""
        self._check_patches(patches)
        h, enc_cache = self.encoder.forward(self.store, patches.patches)
        stride = self.config.pool_stride
        n = h.shape[0]
        bounds = [(g * stride, min((g + 1) * stride, n)) for g in range(-(-n // stride))]
        pooled = np.stack([h[a:b].mean(axis=0) for a, b in bounds])
        out = pooled @ self.store.w("proj.w").T + self.store.w("proj.b")
        return out, (enc_cache, bounds, pooled, h.shape)

    def encode_audio_backward(self, cache, dout: np.ndarray) -> None:
        enc_cache, bounds, pooled, h_shape = cache
        self.store.grad_w("proj.w", dout.T @ pooled)
        self.store.grad_w("proj.b", dout.sum(axis=0))
        dpooled = dout @ self.store.w("proj.w")
        dh = np.zeros(h_shape)
        for g, (a, b) in enumerate(bounds):
            dh[a:b] = dpooled[g] / (b - a)
        self.encoder.backward(self.store, enc_cache, dh)

    # ---------------------------------------------------------- decoder

    def _block_names(self, i: int):
        p = f"dec.b{i}"
        return p

    def decoder_forward(self, x: np.ndarray):
        """Full-sequence pass with caches for backward; x is (S, width)."""
        w = self.store.w
        h = x
        caches = []
        for i in range(self.config.blocks):
            p = self._block_names(i)
            n1, ln1_cache = F.layernorm_fwd(h, w(f"{p}.ln1.g"), w(f"{p}.ln1.b"))
            attn, attn_cache = F.causal_attention_fwd(
                n1, w(f"{p}.attn.wq"), w(f"{p}.attn.wk"), w(f"{p}.attn.wv"),
                w(f"{p}.attn.wo"), self.config.heads,
            )
            h = h + attn
            n2, ln2_cache = F.layernorm_fwd(h, w(f"{p}.ln2.g"), w(f"{p}.ln2.b"))
            m1, lin1_cache = F.linear_fwd(n2, w(f"{p}.mlp.w1"), w(f"{p}.mlp.b1"))
            act, gelu_cache = F.gelu_fwd(m1)
            m2, lin2_cache = F.linear_fwd(act, w(f"{p}.mlp.w2"), w(f"{p}.mlp.b2"))
            h = h + m2
            caches.append((ln1_cache, attn_cache, ln2_cache, lin1_cache, gelu_cache, lin2_cache))
        hf, lnf_cache = F.layernorm_fwd(h, w("dec.lnf.g"), w("dec.lnf.b"))
        return hf, (caches, lnf_cache)

    def decoder_backward(self, cache, dhf: np.ndarray) -> np.ndarray:
        caches, lnf_cache = cache
        dh, dg, db = F.layernorm_bwd(lnf_cache, dhf)
        self.store.grad_w("dec.lnf.g", dg)
        self.store.grad_w("dec.lnf.b", db)
        for i in range(self.config.blocks - 1, -1, -1):
            p = self._block_names(i)
            ln1_cache, attn_cache, ln2_cache, lin1_cache, gelu_cache, lin2_cache = caches[i]
            # mlp branch
            dact, dw2, db2 = F.linear_bwd(lin2_cache, dh)
            self.store.grad_w(f"{p}.mlp.w2", dw2)
            self.store.grad_w(f"{p}.mlp.b2", db2)
            dm1 = F.gelu_bwd(gelu_cache, dact)
            dn2, dw1, db1 = F.linear_bwd(lin1_cache, dm1)
            self.store.grad_w(f"{p}.mlp.w1", dw1)
            self.store.grad_w(f"{p}.mlp.b1", db1)
            dres, dg2, db2b = F.layernorm_bwd(ln2_cache, dn2)
            self.store.grad_w(f"{p}.ln2.g", dg2)
            self.store.grad_w(f"{p}.ln2.b", db2b)
            dh = dh + dres
            # attention branch
            dn1, dwq, dwk, dwv, dwo = F.causal_attention_bwd(attn_cache, dh)
            self.store.grad_w(f"{p}.attn.wq", dwq)
            self.store.grad_w(f"{p}.attn.wk", dwk)
            self.store.grad_w(f"{p}.attn.wv", dwv)
            self.store.grad_w(f"{p}.attn.wo", dwo)
            dres1, dg1, db1b = F.layernorm_bwd(ln1_cache, dn1)
            self.store.grad_w(f"{p}.ln1.g", dg1)
            self.store.grad_w(f"{p}.ln1.b", db1b)
            dh = dh + dres1
        return dh

    # ------------------------------------------------- training forward

    def _embed_sequence(self, audio: np.ndarray, token_ids: np.ndarray):
        n_audio = audio.shape[0]
        seq_len = n_audio + len(token_ids)
        if seq_len > self.config.max_len:
            raise UsageError(
                f"sequence of {seq_len} positions exceeds max_len {self.config.max_len}"
            )
        tok = self.store.w("tok_emb")[token_ids]
        x = np.concatenate([audio, tok], axis=0) + self.store.w("pos_emb")[:seq_len]
        return x, n_audio

    def next_token_logits(self, patches: PatchSequence, token_ids):
        """Logits[t] predicts token_ids[t]; full-graph version with caches.

        Row t is computed from the hidden state one position earlier, so
        it depends only on the audio and tokens strictly before t.
        """
        token_ids = np.asarray(token_ids, dtype=np.int64)
        audio, audio_cache = self.encode_audio_cached(patches)
        x, n_audio = self._embed_sequence(audio, token_ids)
        hf, dec_cache = self.decoder_forward(x)
        rows = hf[n_audio - 1 : n_audio + len(token_ids) - 1]
        logits = rows @ self.store.w("head.w").T
        cache = (audio_cache, dec_cache, hf, x.shape[0], n_audio, token_ids, rows)
        return logits, cache

    def next_token_logits_backward(self, cache, dlogits: np.ndarray) -> None:
        audio_cache, dec_cache, hf, seq_len, n_audio, token_ids, rows = cache
        self.store.grad_w("head.w", dlogits.T @ rows)
        dhf = np.zeros_like(hf)
        dhf[n_audio - 1 : n_audio + len(token_ids) - 1] = dlogits @ self.store.w("head.w")
        dx = self.decoder_backward(dec_cache, dhf)

        dpos = np.zeros_like(self.store.w("pos_emb"))
        dpos[:seq_len] = dx
        self.store.grad_w("pos_emb", dpos)

        dtok_rows = dx[n_audio:]
        dtok = np.zeros_like(self.store.w("tok_emb"))
        np.add.at(dtok, token_ids, dtok_rows)
        self.store.grad_w("tok_emb", dtok)

        self.encode_audio_backward(audio_cache, dx[:n_audio])

    # ------------------------------------------------ cached inference

    def prefix_forward(self, patches: PatchSequence, token_ids):
        """Run [audio || tokens] once; returns (cache, logits after last)."""
        token_ids = np.asarray(token_ids, dtype=np.int64)
        audio, _ = self.encode_audio_cached(patches)
        x, _ = self._embed_sequence(audio, token_ids)
        cache = DecoderCache(
            keys=[None] * self.config.blocks, values=[None] * self.config.blocks
        )
        hf, cache = self._extend_hidden(cache, x)
        return cache, hf[-1] @ self.store.w("head.w").T

    def extend(self, cache: DecoderCache, token_ids):
        """Score continuation tokens against a frozen prefix cache.

        Returns logits rows (one per supplied token, each predicting the
        following position) and the extended cache; the input cache is
        not mutated, so many continuations can share one prefix.
        """
        token_ids = np.asarray(token_ids, dtype=np.int64)
        start = cache.length
        if start + len(token_ids) > self.config.max_len:
            raise UsageError("continuation exceeds max_len")
        x = self.store.w("tok_emb")[token_ids] + self.store.w("pos_emb")[
            start : start + len(token_ids)
        ]
        hf, new_cache = self._extend_hidden(cache, x)
        return hf @ self.store.w("head.w").T, new_cache

    def _extend_hidden(self, cache: DecoderCache, x: np.ndarray):
        w = self.store.w
        h = x
        new_cache = DecoderCache(keys=[], values=[], length=cache.length + x.shape[0])
        for i in range(self.config.blocks):
            p = self._block_names(i)
            n1, _ = F.layernorm_fwd(h, w(f"{p}.ln1.g"), w(f"{p}.ln1.b"))
            attn, k_all, v_all = F.attention_extend(
                n1, cache.keys[i], cache.values[i],
                w(f"{p}.attn.wq"), w(f"{p}.attn.wk"), w(f"{p}.attn.wv"),
                w(f"{p}.attn.wo"), self.config.heads,
            )
            new_cache.keys.append(k_all)
            new_cache.values.append(v_all)
            h = h + attn
            n2, _ = F.layernorm_fwd(h, w(f"{p}.ln2.g"), w(f"{p}.ln2.b"))
            m1 = n2 @ w(f"{p}.mlp.w1").T + w(f"{p}.mlp.b1")
            act, _ = F.gelu_fwd(m1)
            h = h + act @ w(f"{p}.mlp.w2").T + w(f"{p}.mlp.b2")
        hf, _ = F.layernorm_fwd(h, w("dec.lnf.g"), w("dec.lnf.b"))
        return hf, new_cache


def encode_audio(model: AudioLM, patches: PatchSequence) -> np.ndarray:
    """Audio embedding sequence at decoder width (pooled per config)."""
    out, _ = model.encode_audio_cached(patches)
    return out

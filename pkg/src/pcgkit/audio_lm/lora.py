"""Wrapping and merging low-rank adapters onto the audio LM.

Adapters target weight matrices by role. The decoder roles cover the
attention projections and MLP matrices of every block; the encoder
roles cover the scan input/recurrent projections (this encoder's
analogue of attention projections). The token embedding table and the
output head are never adaptable and stay frozen.
"""

from __future__ import annotations

import numpy as np

from ..errors import UsageError
from ..nn.params import trainable_count
from ..util import derive_seed
from .model import AudioLM

DEFAULT_TARGETS = ("attn_q", "attn_k", "attn_v", "attn_o", "enc_in", "enc_rec")


def role_weight_names(model: AudioLM, role: str) -> list[str]:
    c = model.config
    if role == "attn_q":
        return [f"dec.b{i}.attn.wq" for i in range(c.blocks)]
    if role == "attn_k":
        return [f"dec.b{i}.attn.wk" for i in range(c.blocks)]
    if role == "attn_v":
        return [f"dec.b{i}.attn.wv" for i in range(c.blocks)]
    if role == "attn_o":
        return [f"dec.b{i}.attn.wo" for i in range(c.blocks)]
    if role == "mlp_in":
        return [f"dec.b{i}.mlp.w1" for i in range(c.blocks)]
    if role == "mlp_out":
        return [f"dec.b{i}.mlp.w2" for i in range(c.blocks)]
    if role == "enc_embed":
        return ["enc.embed.w"]
    if role == "enc_in":
        return [
            f"enc.l{i}.{d}.w" for i in range(c.enc_layers) for d in ("fwd", "bwd")
        ]
    if role == "enc_rec":
        return [
            f"enc.l{i}.{d}.u" for i in range(c.enc_layers) for d in ("fwd", "bwd")
        ]
    if role == "projector":
        return ["proj.w"]
    valid = (
        "attn_q attn_k attn_v attn_o mlp_in mlp_out "
        "enc_embed enc_in enc_rec projector"
    ).split()
    raise UsageError(f"unknown adapter target role {role!r}; valid roles: {valid}")


def lora_wrap(
    model: AudioLM,
    rank: int,
    alpha: float,
    targets=DEFAULT_TARGETS,
) -> AudioLM:
    """Attach adapters to every targeted matrix and freeze the rest.

    B factors start at zero, so the wrapped model's outputs are
    identical to the unwrapped model's until training moves them.
    """
    if rank < 1:
        raise UsageError(f"rank must be >= 1, got {rank}")
    if not targets:
        raise UsageError("targets must be non-empty")
    if model.adapters:
        raise UsageError("model already has adapters")
    names: list[str] = []
    for role in targets:
        names.extend(role_weight_names(model, role))
    rng = np.random.default_rng(derive_seed(model.config.seed, "lora-init", rank))
    for name in sorted(set(names)):
        model.store.attach_adapter(name, rank, alpha, rng)
    adapter_param_names = {
        a.A.name for a in model.adapters.values()
    } | {a.B.name for a in model.adapters.values()}
    for pname, p in model.params.items():
        p.trainable = pname in adapter_param_names
    return model


def lora_merge(model: AudioLM) -> AudioLM:
    """Fold every adapter into its base matrix (base += scale * B@A)."""
    if not model.adapters:
        raise UsageError("no adapters to merge")
    for name in sorted(model.adapters):
        model.store.merge_adapter(name)
    return model


def adapter_trainable_count(model: AudioLM) -> int:
    return trainable_count(model.params)

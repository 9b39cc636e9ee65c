"""Primitive forward/backward pairs used by the models.

Every *_fwd returns (output, cache); the matching *_bwd consumes the
cache and the upstream gradient and returns input gradients plus
parameter gradients. The pairing is verified end to end by the
finite-difference suites.
"""

from __future__ import annotations

import numpy as np
from scipy.special import erf

SQRT2 = np.sqrt(2.0)
INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


# ---------------------------------------------------------------- linear

def linear_fwd(x: np.ndarray, w: np.ndarray, b: np.ndarray | None = None):
    """y = x @ w.T (+ b); w has shape (d_out, d_in)."""
    y = x @ w.T
    if b is not None:
        y = y + b
    return y, (x, w)


def linear_bwd(cache, dy: np.ndarray):
    x, w = cache
    dx = dy @ w
    dw = dy.T @ x
    db = dy.sum(axis=0)
    return dx, dw, db


# ------------------------------------------------------------- layernorm

def layernorm_fwd(x: np.ndarray, gamma: np.ndarray, beta: np.ndarray, eps: float = 1e-5):
    mu = x.mean(axis=-1, keepdims=True)
    var = x.var(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = (x - mu) * inv
    return xhat * gamma + beta, (xhat, inv, gamma)


def layernorm_bwd(cache, dy: np.ndarray):
    xhat, inv, gamma = cache
    d = xhat.shape[-1]
    dgamma = (dy * xhat).sum(axis=tuple(range(dy.ndim - 1)))
    dbeta = dy.sum(axis=tuple(range(dy.ndim - 1)))
    dxhat = dy * gamma
    dx = inv / d * (
        d * dxhat
        - dxhat.sum(axis=-1, keepdims=True)
        - xhat * (dxhat * xhat).sum(axis=-1, keepdims=True)
    )
    return dx, dgamma, dbeta


# ------------------------------------------------------------------ gelu

def gelu_fwd(x: np.ndarray):
    phi = 0.5 * (1.0 + erf(x / SQRT2))
    return x * phi, (x, phi)


def gelu_bwd(cache, dy: np.ndarray):
    x, phi = cache
    pdf = INV_SQRT_2PI * np.exp(-0.5 * x * x)
    return dy * (phi + x * pdf)


# --------------------------------------------------------------- softmax

def softmax(z: np.ndarray, axis: int = -1) -> np.ndarray:
    z = z - z.max(axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


def log_softmax(z: np.ndarray, axis: int = -1) -> np.ndarray:
    z = z - z.max(axis=axis, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=axis, keepdims=True))


# ------------------------------------------------- causal self-attention

def causal_attention_fwd(x: np.ndarray, wq, wk, wv, wo, n_heads: int):
    """Multi-head self-attention over one sequence (T, D), strictly lower
    triangular visibility (each position attends to itself and the past).
    """
    seq, dim = x.shape
    dh = dim // n_heads
    q, _ = linear_fwd(x, wq)
    k, _ = linear_fwd(x, wk)
    v, _ = linear_fwd(x, wv)
    qh = q.reshape(seq, n_heads, dh).transpose(1, 0, 2)  # (h, T, dh)
    kh = k.reshape(seq, n_heads, dh).transpose(1, 0, 2)
    vh = v.reshape(seq, n_heads, dh).transpose(1, 0, 2)
    scores = qh @ kh.transpose(0, 2, 1) / np.sqrt(dh)  # (h, T, T)
    mask = np.triu(np.ones((seq, seq), dtype=bool), k=1)
    scores[:, mask] = -np.inf
    attn = softmax(scores, axis=-1)
    ctx = attn @ vh  # (h, T, dh)
    merged = ctx.transpose(1, 0, 2).reshape(seq, dim)
    out, _ = linear_fwd(merged, wo)
    cache = (x, wq, wk, wv, wo, qh, kh, vh, attn, merged, n_heads)
    return out, cache


def causal_attention_bwd(cache, dout: np.ndarray):
    x, wq, wk, wv, wo, qh, kh, vh, attn, merged, n_heads = cache
    seq, dim = x.shape
    dh = dim // n_heads

    dmerged, dwo, _ = linear_bwd((merged, wo), dout)
    dctx = dmerged.reshape(seq, n_heads, dh).transpose(1, 0, 2)

    dattn = dctx @ vh.transpose(0, 2, 1)  # (h, T, T)
    dvh = attn.transpose(0, 2, 1) @ dctx
    # softmax backward per row; masked entries have attn == 0 so they drop out
    dscores = attn * (dattn - (dattn * attn).sum(axis=-1, keepdims=True))
    dscores /= np.sqrt(dh)
    dqh = dscores @ kh
    dkh = dscores.transpose(0, 2, 1) @ qh

    dq = dqh.transpose(1, 0, 2).reshape(seq, dim)
    dk = dkh.transpose(1, 0, 2).reshape(seq, dim)
    dv = dvh.transpose(1, 0, 2).reshape(seq, dim)

    dx_q, dwq, _ = linear_bwd((x, wq), dq)
    dx_k, dwk, _ = linear_bwd((x, wk), dk)
    dx_v, dwv, _ = linear_bwd((x, wv), dv)
    dx = dx_q + dx_k + dx_v
    return dx, dwq, dwk, dwv, dwo


def attention_extend(x_new: np.ndarray, k_cache, v_cache, wq, wk, wv, wo, n_heads: int):
    """Incremental attention for inference: process new rows against
    cached keys/values plus their own causal context. Returns the output
    rows and the extended (k, v) caches. No gradient path.
    """
    n_new, dim = x_new.shape
    dh = dim // n_heads
    q = (x_new @ wq.T).reshape(n_new, n_heads, dh).transpose(1, 0, 2)
    k_new = (x_new @ wk.T).reshape(n_new, n_heads, dh).transpose(1, 0, 2)
    v_new = (x_new @ wv.T).reshape(n_new, n_heads, dh).transpose(1, 0, 2)
    k_all = k_new if k_cache is None else np.concatenate([k_cache, k_new], axis=1)
    v_all = v_new if v_cache is None else np.concatenate([v_cache, v_new], axis=1)
    n_past = k_all.shape[1] - n_new

    scores = q @ k_all.transpose(0, 2, 1) / np.sqrt(dh)  # (h, n_new, n_past+n_new)
    col = np.arange(k_all.shape[1])[None, :]
    row = (n_past + np.arange(n_new))[:, None]
    scores[:, col > row] = -np.inf
    attn = softmax(scores, axis=-1)
    ctx = (attn @ v_all).transpose(1, 0, 2).reshape(n_new, dim)
    return ctx @ wo.T, k_all, v_all


# ---------------------------------------------------------- cross-entropy

def cross_entropy_rows(logits: np.ndarray, targets: np.ndarray):
    """Per-row -log softmax probability of the target class.

    Returns (losses, dlogits_unit) where dlogits_unit is the gradient of
    each row's loss w.r.t. that row's logits (callers scale by their own
    weights before backprop).
    """
    logp = log_softmax(logits, axis=-1)
    rows = np.arange(len(targets))
    losses = -logp[rows, targets]
    dlogits = np.exp(logp)
    dlogits[rows, targets] -= 1.0
    return losses, dlogits


# --------------------------------------------------------------- sigmoid

def sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out

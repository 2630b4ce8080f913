"""Encoder-decoder transformer over token ids, implemented on numpy with
hand-written backward passes.

The model is small enough (2 layers, 2 heads, d_model 50 by default) that
64-bit CPU matmuls are fast, and the explicit backward pass lets every
gradient be checked against central finite differences. Post-norm residual
blocks, sinusoidal positions, scaled-dot-product attention with additive
masking, ReLU feed-forward. Note the attention width n_heads*d_v (64 by
default) differs from d_model (50); the output projection maps it back.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .vocab import BOS, EOS, PAD, UNK, Vocab

NEG = -1e9  # additive mask value; exp() underflows to exactly 0 after shift
LN_EPS = 1e-6


class ModelError(ValueError):
    pass


@dataclass
class ModelConfig:
    n_layers: int = 2
    n_heads: int = 2
    d_k: int = 32
    d_v: int = 32
    d_model: int = 50
    d_word_vec: int = 50
    d_inner_hid: int = 400
    dropout: float = 0.2
    max_len: int = 64
    label_smoothing: float = 0.0

    def __post_init__(self) -> None:
        dims = (self.n_layers, self.n_heads, self.d_k, self.d_v, self.d_model,
                self.d_word_vec, self.d_inner_hid, self.max_len)
        if any(d < 1 for d in dims):
            raise ModelError(f"all dimensions must be positive: {self}")
        if self.d_word_vec != self.d_model:
            raise ModelError("d_word_vec must equal d_model")
        if not 0.0 <= self.dropout < 1.0:
            raise ModelError(f"dropout must be in [0, 1): {self.dropout}")
        if not 0.0 <= self.label_smoothing < 1.0:
            raise ModelError(f"label smoothing must be in [0, 1): {self.label_smoothing}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        return cls(**d)


def sinusoid_table(max_len: int, d_model: int) -> np.ndarray:
    pos = np.arange(max_len, dtype=np.float64)[:, None]
    i = np.arange(d_model, dtype=np.float64)[None, :]
    angle = pos / np.power(10000.0, 2.0 * np.floor(i / 2.0) / d_model)
    table = np.empty((max_len, d_model))
    table[:, 0::2] = np.sin(angle[:, 0::2])
    table[:, 1::2] = np.cos(angle[:, 1::2])
    return table


def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def _init_params(cfg: ModelConfig, n_src: int, n_tgt: int, seed: int) -> dict[str, np.ndarray]:
    rng = np.random.Generator(np.random.PCG64(seed))
    d, h = cfg.d_model, cfg.n_heads
    p: dict[str, np.ndarray] = {}
    p["src_emb"] = _glorot(rng, n_src, d)
    p["tgt_emb"] = _glorot(rng, n_tgt, d)

    def attn_block(prefix: str) -> None:
        p[f"{prefix}.wq"] = _glorot(rng, d, h * cfg.d_k)
        p[f"{prefix}.bq"] = np.zeros(h * cfg.d_k)
        p[f"{prefix}.wk"] = _glorot(rng, d, h * cfg.d_k)
        p[f"{prefix}.bk"] = np.zeros(h * cfg.d_k)
        p[f"{prefix}.wv"] = _glorot(rng, d, h * cfg.d_v)
        p[f"{prefix}.bv"] = np.zeros(h * cfg.d_v)
        p[f"{prefix}.wo"] = _glorot(rng, h * cfg.d_v, d)
        p[f"{prefix}.bo"] = np.zeros(d)

    def ln_block(prefix: str) -> None:
        p[f"{prefix}.g"] = np.ones(d)
        p[f"{prefix}.b"] = np.zeros(d)

    def ffn_block(prefix: str) -> None:
        p[f"{prefix}.w1"] = _glorot(rng, d, cfg.d_inner_hid)
        p[f"{prefix}.b1"] = np.zeros(cfg.d_inner_hid)
        p[f"{prefix}.w2"] = _glorot(rng, cfg.d_inner_hid, d)
        p[f"{prefix}.b2"] = np.zeros(d)

    for i in range(cfg.n_layers):
        attn_block(f"enc.{i}.attn")
        ln_block(f"enc.{i}.ln1")
        ffn_block(f"enc.{i}.ffn")
        ln_block(f"enc.{i}.ln2")
    for i in range(cfg.n_layers):
        attn_block(f"dec.{i}.self")
        ln_block(f"dec.{i}.ln1")
        attn_block(f"dec.{i}.cross")
        ln_block(f"dec.{i}.ln2")
        ffn_block(f"dec.{i}.ffn")
        ln_block(f"dec.{i}.ln3")
    p["out.w"] = _glorot(rng, d, n_tgt)
    p["out.b"] = np.zeros(n_tgt)
    return p


# low-level pieces; each *_bwd accumulates parameter grads and returns dx


def _linear_bwd(dy, x, w, grads, wname, bname):
    grads[wname] += x.reshape(-1, x.shape[-1]).T @ dy.reshape(-1, dy.shape[-1])
    grads[bname] += dy.reshape(-1, dy.shape[-1]).sum(axis=0)
    return dy @ w.T


def _ln_fwd(x, g, b):
    mu = x.mean(-1, keepdims=True)
    xc = x - mu
    var = (xc * xc).mean(-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + LN_EPS)
    xhat = xc * inv
    return xhat * g + b, (xhat, inv)


def _ln_bwd(dy, cache, g, grads, prefix):
    xhat, inv = cache
    flat_axes = tuple(range(dy.ndim - 1))
    grads[f"{prefix}.g"] += (dy * xhat).sum(axis=flat_axes)
    grads[f"{prefix}.b"] += dy.sum(axis=flat_axes)
    dxhat = dy * g
    m1 = dxhat.mean(-1, keepdims=True)
    m2 = (dxhat * xhat).mean(-1, keepdims=True)
    return inv * (dxhat - m1 - xhat * m2)


def _dropout_fwd(x, rate, rng):
    if rate <= 0.0 or rng is None:
        return x, None
    keep = 1.0 - rate
    mask = (rng.random(x.shape) < keep).astype(np.float64) / keep
    return x * mask, mask


def _dropout_bwd(dy, mask):
    return dy if mask is None else dy * mask


def _mha_fwd(params, prefix, q_in, kv_in, mask, cfg, rate, rng):
    h, dk, dv = cfg.n_heads, cfg.d_k, cfg.d_v
    B, Lq, _ = q_in.shape
    Lk = kv_in.shape[1]
    q = q_in @ params[f"{prefix}.wq"] + params[f"{prefix}.bq"]
    k = kv_in @ params[f"{prefix}.wk"] + params[f"{prefix}.bk"]
    v = kv_in @ params[f"{prefix}.wv"] + params[f"{prefix}.bv"]
    qh = q.reshape(B, Lq, h, dk).transpose(0, 2, 1, 3)
    kh = k.reshape(B, Lk, h, dk).transpose(0, 2, 1, 3)
    vh = v.reshape(B, Lk, h, dv).transpose(0, 2, 1, 3)
    scores = qh @ kh.transpose(0, 1, 3, 2) / math.sqrt(dk)
    scores = np.where(mask, scores, NEG)
    m = scores.max(-1, keepdims=True)
    e = np.exp(scores - m)
    p = e / e.sum(-1, keepdims=True)
    p_drop, pmask = _dropout_fwd(p, rate, rng)
    ctx = p_drop @ vh
    merged = ctx.transpose(0, 2, 1, 3).reshape(B, Lq, h * dv)
    out = merged @ params[f"{prefix}.wo"] + params[f"{prefix}.bo"]
    return out, (q_in, kv_in, qh, kh, vh, p, p_drop, pmask, merged)


def _mha_bwd(dy, cache, params, prefix, grads, cfg):
    q_in, kv_in, qh, kh, vh, p, p_drop, pmask, merged = cache
    h, dk, dv = cfg.n_heads, cfg.d_k, cfg.d_v
    B, Lq, _ = q_in.shape
    Lk = kv_in.shape[1]
    dmerged = _linear_bwd(dy, merged, params[f"{prefix}.wo"], grads, f"{prefix}.wo", f"{prefix}.bo")
    dctx = dmerged.reshape(B, Lq, h, dv).transpose(0, 2, 1, 3)
    dp_drop = dctx @ vh.transpose(0, 1, 3, 2)
    dvh = p_drop.transpose(0, 1, 3, 2) @ dctx
    dp = _dropout_bwd(dp_drop, pmask)
    ds = p * (dp - (dp * p).sum(-1, keepdims=True))
    ds /= math.sqrt(dk)
    dqh = ds @ kh
    dkh = ds.transpose(0, 1, 3, 2) @ qh
    dq = dqh.transpose(0, 2, 1, 3).reshape(B, Lq, h * dk)
    dk_full = dkh.transpose(0, 2, 1, 3).reshape(B, Lk, h * dk)
    dv_full = dvh.transpose(0, 2, 1, 3).reshape(B, Lk, h * dv)
    dq_in = _linear_bwd(dq, q_in, params[f"{prefix}.wq"], grads, f"{prefix}.wq", f"{prefix}.bq")
    dk_in = _linear_bwd(dk_full, kv_in, params[f"{prefix}.wk"], grads, f"{prefix}.wk", f"{prefix}.bk")
    dv_in = _linear_bwd(dv_full, kv_in, params[f"{prefix}.wv"], grads, f"{prefix}.wv", f"{prefix}.bv")
    return dq_in, dk_in + dv_in


def _ffn_fwd(params, prefix, x):
    h1 = x @ params[f"{prefix}.w1"] + params[f"{prefix}.b1"]
    relu_mask = h1 > 0
    a = h1 * relu_mask
    out = a @ params[f"{prefix}.w2"] + params[f"{prefix}.b2"]
    return out, (x, relu_mask, a)


def _ffn_bwd(dy, cache, params, prefix, grads):
    x, relu_mask, a = cache
    da = _linear_bwd(dy, a, params[f"{prefix}.w2"], grads, f"{prefix}.w2", f"{prefix}.b2")
    dh1 = da * relu_mask
    return _linear_bwd(dh1, x, params[f"{prefix}.w1"], grads, f"{prefix}.w1", f"{prefix}.b1")


def cross_entropy(logits, targets, valid, label_smoothing=0.0):
    """Mean cross-entropy over valid positions; returns (loss, dlogits, n).

    ``valid`` is a boolean (B, L) mask excluding padding from the mean.
    """
    n = int(valid.sum())
    if n == 0:
        raise ModelError("all target positions are padding")
    m = logits.max(-1, keepdims=True)
    e = np.exp(logits - m)
    z = e.sum(-1, keepdims=True)
    logp = logits - m - np.log(z)
    nll = -np.take_along_axis(logp, targets[..., None], axis=-1)[..., 0]
    V = logits.shape[-1]
    if label_smoothing > 0.0:
        nll = (1.0 - label_smoothing) * nll - label_smoothing * logp.mean(-1)
    loss = float((nll * valid).sum() / n)
    prob = e / z
    tdist = np.zeros_like(prob)
    np.put_along_axis(tdist, targets[..., None], 1.0, axis=-1)
    if label_smoothing > 0.0:
        tdist = (1.0 - label_smoothing) * tdist + label_smoothing / V
    dlogits = (prob - tdist) * valid[..., None] / n
    return loss, dlogits, n


class Transformer:
    """The p2g/g2p model; direction only swaps which vocabulary is which."""

    def __init__(
        self,
        config: ModelConfig,
        src_vocab: Vocab,
        tgt_vocab: Vocab,
        direction: str = "p2g",
        seed: int = 0,
    ) -> None:
        self.config = config
        self.src_vocab = src_vocab
        self.tgt_vocab = tgt_vocab
        self.direction = direction
        self.seed = seed
        self.params = _init_params(config, len(src_vocab), len(tgt_vocab), seed)
        self.pe = sinusoid_table(config.max_len, config.d_model)
        self.meta: dict = {}

    @classmethod
    def from_parts(cls, config, src_vocab, tgt_vocab, direction, params, meta=None) -> "Transformer":
        model = cls.__new__(cls)
        model.config = config
        model.src_vocab = src_vocab
        model.tgt_vocab = tgt_vocab
        model.direction = direction
        model.seed = meta.get("seed", 0) if meta else 0
        model.params = params
        model.pe = sinusoid_table(config.max_len, config.d_model)
        model.meta = meta or {}
        return model

    # decoding protocol
    @property
    def eos_id(self) -> int:
        return EOS

    @property
    def forbidden_ids(self) -> tuple[int, ...]:
        return (PAD, BOS, UNK)

    @property
    def tgt_tokens(self) -> tuple[str, ...]:
        return self.tgt_vocab.tokens

    def zero_grads(self) -> dict[str, np.ndarray]:
        return {k: np.zeros_like(v) for k, v in self.params.items()}

    def _check_batch(self, ids: np.ndarray, vocab_size: int, what: str) -> None:
        if ids.ndim != 2:
            raise ModelError(f"{what} ids must be a (batch, length) matrix")
        if ids.shape[1] > self.config.max_len:
            raise ModelError(
                f"{what} length {ids.shape[1]} exceeds max_len {self.config.max_len}"
            )
        if ids.size and (ids.min() < 0 or ids.max() >= vocab_size):
            raise ModelError(f"{what} ids out of range for vocabulary of {vocab_size}")

    def forward(self, src, tgt_in, *, dropout: float = 0.0, rng=None) -> np.ndarray:
        logits, _ = self._forward_cache(src, tgt_in, dropout=dropout, rng=rng)
        return logits

    def logits_for_prefix(self, src_ids: Sequence[int], prefix_ids: Sequence[int]) -> np.ndarray:
        """Evaluation-mode logits, one row per prefix position."""
        if not prefix_ids or prefix_ids[0] != BOS:
            raise ModelError("target prefix must start with BOS")
        src = np.asarray([list(src_ids)], dtype=np.int64)
        tgt = np.asarray([list(prefix_ids)], dtype=np.int64)
        return self.forward(src, tgt)[0]

    def _forward_cache(self, src, tgt_in, *, dropout=0.0, rng=None):
        cfg = self.config
        src = np.asarray(src, dtype=np.int64)
        tgt_in = np.asarray(tgt_in, dtype=np.int64)
        self._check_batch(src, len(self.src_vocab), "source")
        self._check_batch(tgt_in, len(self.tgt_vocab), "target")
        B, Ls = src.shape
        Lt = tgt_in.shape[1]
        p = self.params
        scale = math.sqrt(cfg.d_model)

        src_key = (src != PAD)[:, None, None, :]
        causal = np.tril(np.ones((Lt, Lt), dtype=bool))[None, None, :, :]
        tgt_mask = causal & (tgt_in != PAD)[:, None, None, :]

        x = p["src_emb"][src] * scale + self.pe[:Ls]
        x, src_emb_mask = _dropout_fwd(x, dropout, rng)
        enc_caches = []
        for i in range(cfg.n_layers):
            a, attn_c = _mha_fwd(p, f"enc.{i}.attn", x, x, src_key, cfg, dropout, rng)
            a_drop, am = _dropout_fwd(a, dropout, rng)
            h1, ln1_c = _ln_fwd(x + a_drop, p[f"enc.{i}.ln1.g"], p[f"enc.{i}.ln1.b"])
            f, ffn_c = _ffn_fwd(p, f"enc.{i}.ffn", h1)
            f_drop, fm = _dropout_fwd(f, dropout, rng)
            x, ln2_c = _ln_fwd(h1 + f_drop, p[f"enc.{i}.ln2.g"], p[f"enc.{i}.ln2.b"])
            enc_caches.append((attn_c, am, ln1_c, ffn_c, fm, ln2_c))
        memory = x

        y = p["tgt_emb"][tgt_in] * scale + self.pe[:Lt]
        y, tgt_emb_mask = _dropout_fwd(y, dropout, rng)
        dec_caches = []
        for i in range(cfg.n_layers):
            a, self_c = _mha_fwd(p, f"dec.{i}.self", y, y, tgt_mask, cfg, dropout, rng)
            a_drop, am = _dropout_fwd(a, dropout, rng)
            y1, ln1_c = _ln_fwd(y + a_drop, p[f"dec.{i}.ln1.g"], p[f"dec.{i}.ln1.b"])
            c, cross_c = _mha_fwd(p, f"dec.{i}.cross", y1, memory, src_key, cfg, dropout, rng)
            c_drop, cm = _dropout_fwd(c, dropout, rng)
            y2, ln2_c = _ln_fwd(y1 + c_drop, p[f"dec.{i}.ln2.g"], p[f"dec.{i}.ln2.b"])
            f, ffn_c = _ffn_fwd(p, f"dec.{i}.ffn", y2)
            f_drop, fm = _dropout_fwd(f, dropout, rng)
            y, ln3_c = _ln_fwd(y2 + f_drop, p[f"dec.{i}.ln3.g"], p[f"dec.{i}.ln3.b"])
            dec_caches.append((self_c, am, ln1_c, cross_c, cm, ln2_c, ffn_c, fm, ln3_c))
        logits = y @ p["out.w"] + p["out.b"]

        cache = (src, tgt_in, src_emb_mask, tgt_emb_mask, enc_caches, dec_caches, y)
        return logits, cache

    def _backward(self, dlogits, cache) -> dict[str, np.ndarray]:
        cfg = self.config
        p = self.params
        src, tgt_in, src_emb_mask, tgt_emb_mask, enc_caches, dec_caches, y_final = cache
        grads = self.zero_grads()
        scale = math.sqrt(cfg.d_model)

        dy = _linear_bwd(dlogits, y_final, p["out.w"], grads, "out.w", "out.b")
        dmemory = None
        for i in reversed(range(cfg.n_layers)):
            self_c, am, ln1_c, cross_c, cm, ln2_c, ffn_c, fm, ln3_c = dec_caches[i]
            dr3 = _ln_bwd(dy, ln3_c, p[f"dec.{i}.ln3.g"], grads, f"dec.{i}.ln3")
            dy2 = dr3 + _ffn_bwd(_dropout_bwd(dr3, fm), ffn_c, p, f"dec.{i}.ffn", grads)
            dr2 = _ln_bwd(dy2, ln2_c, p[f"dec.{i}.ln2.g"], grads, f"dec.{i}.ln2")
            dq, dkv = _mha_bwd(_dropout_bwd(dr2, cm), cross_c, p, f"dec.{i}.cross", grads, cfg)
            dmemory = dkv if dmemory is None else dmemory + dkv
            dy1 = dr2 + dq
            dr1 = _ln_bwd(dy1, ln1_c, p[f"dec.{i}.ln1.g"], grads, f"dec.{i}.ln1")
            dq, dkv = _mha_bwd(_dropout_bwd(dr1, am), self_c, p, f"dec.{i}.self", grads, cfg)
            dy = dr1 + dq + dkv
        dy = _dropout_bwd(dy, tgt_emb_mask)
        np.add.at(grads["tgt_emb"], tgt_in.reshape(-1), dy.reshape(-1, cfg.d_model) * scale)

        dx = dmemory if dmemory is not None else np.zeros_like(dy)
        for i in reversed(range(cfg.n_layers)):
            attn_c, am, ln1_c, ffn_c, fm, ln2_c = enc_caches[i]
            dr2 = _ln_bwd(dx, ln2_c, p[f"enc.{i}.ln2.g"], grads, f"enc.{i}.ln2")
            dh1 = dr2 + _ffn_bwd(_dropout_bwd(dr2, fm), ffn_c, p, f"enc.{i}.ffn", grads)
            dr1 = _ln_bwd(dh1, ln1_c, p[f"enc.{i}.ln1.g"], grads, f"enc.{i}.ln1")
            dq, dkv = _mha_bwd(_dropout_bwd(dr1, am), attn_c, p, f"enc.{i}.attn", grads, cfg)
            dx = dr1 + dq + dkv
        dx = _dropout_bwd(dx, src_emb_mask)
        np.add.at(grads["src_emb"], src.reshape(-1), dx.reshape(-1, cfg.d_model) * scale)
        return grads

    def loss_only(self, src, tgt_in, tgt_out) -> float:
        logits = self.forward(src, tgt_in)
        valid = np.asarray(tgt_out, dtype=np.int64) != PAD
        loss, _, _ = cross_entropy(logits, np.asarray(tgt_out), valid, self.config.label_smoothing)
        return loss

    def loss_and_grads(self, src, tgt_in, tgt_out, *, dropout=0.0, rng=None):
        """Returns (loss, grads, n_tokens) with grads keyed like params."""
        logits, cache = self._forward_cache(src, tgt_in, dropout=dropout, rng=rng)
        tgt_out = np.asarray(tgt_out, dtype=np.int64)
        valid = tgt_out != PAD
        loss, dlogits, n = cross_entropy(logits, tgt_out, valid, self.config.label_smoothing)
        grads = self._backward(dlogits, cache)
        return loss, grads, n

    def step_log_probs(self, src_ids: Sequence[int], prefixes: Sequence[Sequence[int]]) -> np.ndarray:
        """Next-token log-probabilities for equal-length prefixes (no BOS).

        Used by the decoders; evaluation mode, deterministic.
        """
        if not prefixes:
            raise ModelError("no prefixes given")
        lengths = {len(p) for p in prefixes}
        if len(lengths) != 1:
            raise ModelError("prefixes must share one length")
        n = len(prefixes)
        src = np.tile(np.asarray(list(src_ids), dtype=np.int64), (n, 1))
        tgt_in = np.asarray([[BOS] + list(p) for p in prefixes], dtype=np.int64)
        logits = self.forward(src, tgt_in)[:, -1, :]
        m = logits.max(-1, keepdims=True)
        e = np.exp(logits - m)
        return logits - m - np.log(e.sum(-1, keepdims=True))


def pad_batch(seqs: Sequence[Sequence[int]], pad_id: int = PAD) -> np.ndarray:
    width = max(len(s) for s in seqs)
    out = np.full((len(seqs), width), pad_id, dtype=np.int64)
    for i, s in enumerate(seqs):
        out[i, : len(s)] = s
    return out

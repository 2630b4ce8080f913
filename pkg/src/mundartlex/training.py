"""Teacher-forced training loop: Adam with an inverse-square-root warmup
schedule, seeded shuffling, per-epoch loss history."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import ModelError, Transformer, pad_batch
from .vocab import BOS, EOS


class TrainingDivergedError(RuntimeError):
    def __init__(self, step: int, loss: float) -> None:
        super().__init__(f"non-finite loss {loss!r} at optimizer step {step}")
        self.step = step


@dataclass
class TrainConfig:
    epochs: int = 55
    batch_size: int = 64
    dropout: float = 0.2
    seed: int = 0
    lr_scale: float = 1.0
    warmup_steps: int = 400
    beta1: float = 0.9
    beta2: float = 0.98
    eps: float = 1e-9

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ModelError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ModelError(f"batch_size must be >= 1, got {self.batch_size}")
        if not 0.0 <= self.dropout < 1.0:
            raise ModelError(f"dropout must be in [0, 1): {self.dropout}")
        if self.warmup_steps < 1:
            raise ModelError("warmup_steps must be >= 1")


class AdamState:
    def __init__(self, model: Transformer, cfg: TrainConfig) -> None:
        self.m = {k: np.zeros_like(v) for k, v in model.params.items()}
        self.v = {k: np.zeros_like(v) for k, v in model.params.items()}
        self.cfg = cfg
        self.d_model = model.config.d_model
        self.step = 0

    def learning_rate(self) -> float:
        c = self.cfg
        t = self.step
        return c.lr_scale * self.d_model ** -0.5 * min(t ** -0.5, t * c.warmup_steps ** -1.5)

    def update(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        c = self.cfg
        self.step += 1
        lr = self.learning_rate()
        b1c = 1.0 - c.beta1 ** self.step
        b2c = 1.0 - c.beta2 ** self.step
        for k, g in grads.items():
            m = self.m[k]
            v = self.v[k]
            m *= c.beta1
            m += (1.0 - c.beta1) * g
            v *= c.beta2
            v += (1.0 - c.beta2) * g * g
            params[k] -= lr * (m / b1c) / (np.sqrt(v / b2c) + c.eps)


def encode_pairs(
    model: Transformer, pairs: Sequence[tuple[Sequence[str], Sequence[str]]]
) -> list[tuple[list[int], list[int]]]:
    encoded = []
    for i, (src, tgt) in enumerate(pairs):
        s = model.src_vocab.encode(src)
        t = model.tgt_vocab.encode(tgt)
        if len(s) > model.config.max_len or len(t) + 1 > model.config.max_len:
            raise ModelError(f"pair {i} exceeds max_len {model.config.max_len}")
        encoded.append((s, t))
    return encoded


def train(
    model: Transformer,
    pairs: Sequence[tuple[Sequence[str], Sequence[str]]],
    cfg: TrainConfig,
) -> tuple[Transformer, list[float]]:
    """Train in place; returns the model and the per-epoch mean loss history.

    One optimizer step per batch, epochs * ceil(N / batch_size) steps total.
    Identical seed and data give bit-identical weights and history.
    """
    if not pairs:
        raise ModelError("no training pairs")
    encoded = encode_pairs(model, pairs)
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    adam = AdamState(model, cfg)
    history: list[float] = []
    n = len(encoded)
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        epoch_nll = 0.0
        epoch_tokens = 0
        for start in range(0, n, cfg.batch_size):
            batch = [encoded[j] for j in order[start : start + cfg.batch_size]]
            src = pad_batch([s for s, _ in batch])
            tgt_in = pad_batch([[BOS] + t for _, t in batch])
            tgt_out = pad_batch([t + [EOS] for _, t in batch])
            loss, grads, n_tokens = model.loss_and_grads(
                src, tgt_in, tgt_out, dropout=cfg.dropout, rng=rng
            )
            if not math.isfinite(loss):
                raise TrainingDivergedError(adam.step + 1, loss)
            adam.update(model.params, grads)
            epoch_nll += loss * n_tokens
            epoch_tokens += n_tokens
        history.append(epoch_nll / epoch_tokens)
    model.meta.update(
        {
            "epochs": cfg.epochs,
            "batch_size": cfg.batch_size,
            "dropout": cfg.dropout,
            "seed": cfg.seed,
            "final_loss": history[-1],
            "steps": adam.step,
        }
    )
    return model, history


def split_pairs(
    pairs: Sequence, fractions: tuple[float, float, float], seed: int
) -> tuple[list, list, list]:
    """Deterministic shuffled train/valid/test split by fractions."""
    if len(fractions) != 3 or any(f < 0 for f in fractions) or sum(fractions) <= 0:
        raise ModelError(f"bad split fractions {fractions!r}")
    total = sum(fractions)
    rng = np.random.Generator(np.random.PCG64(seed))
    order = rng.permutation(len(pairs))
    n_train = int(round(len(pairs) * fractions[0] / total))
    n_valid = int(round(len(pairs) * fractions[1] / total))
    train_idx = order[:n_train]
    valid_idx = order[n_train : n_train + n_valid]
    test_idx = order[n_train + n_valid :]
    pick = lambda idx: [pairs[i] for i in idx]
    return pick(train_idx), pick(valid_idx), pick(test_idx)

#!/usr/bin/env python3
"""Train the small transformer until it memorizes a toy dictionary.

Builds a 50-pair SAMPA-to-writing set from a fixed transliteration, trains
with dropout 0.2, then reports greedy exact-match on the training pairs.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from mundartlex.decode import DecodeConfig, greedy_decode
from mundartlex.model import ModelConfig, Transformer
from mundartlex.training import TrainConfig, train
from mundartlex.vocab import build_vocabs, detokenize_target, tokenize_source, tokenize_target

TRANSLIT = {
    "b": "b", "d": "d", "f": "f", "g": "g", "k": "k", "l": "l", "m": "m",
    "n": "n", "r": "r", "s": "s", "t": "t", "S": "sch", "N": "ng",
    "a": "a", "e": "e", "i": "i", "o": "o", "u": "u",
    "{": "ä", "2": "ö", "y": "ü", "@": "e",
}


def make_pairs(n_pairs: int, seed: int):
    rng = np.random.default_rng(seed)
    phones = list(TRANSLIT)
    pairs, seen = [], set()
    while len(pairs) < n_pairs:
        n = int(rng.integers(3, 7))
        seq = [phones[i] for i in rng.integers(0, len(phones), n)]
        gsw = "".join(TRANSLIT[p] for p in seq)
        sampa = " ".join(seq)
        if sampa in seen or any(a == b for a, b in zip(gsw, gsw[1:])):
            continue
        seen.add(sampa)
        pairs.append((tokenize_source(sampa, "p2g"), tokenize_target(gsw, "p2g")))
    return pairs


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--pairs", type=int, default=50)
    ap.add_argument("--epochs", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    pairs = make_pairs(args.pairs, seed=7)
    src_vocab, tgt_vocab = build_vocabs(pairs)
    model = Transformer(
        ModelConfig(
            n_layers=2, n_heads=2, d_k=16, d_v=16, d_model=32, d_word_vec=32,
            d_inner_hid=128, dropout=0.2, max_len=40,
        ),
        src_vocab,
        tgt_vocab,
        seed=args.seed,
    )
    cfg = TrainConfig(
        epochs=args.epochs, batch_size=10, dropout=0.2, seed=args.seed,
        warmup_steps=300, lr_scale=0.5,
    )
    start = time.time()
    model, history = train(model, pairs, cfg)
    print(f"trained {cfg.epochs} epochs in {time.time() - start:.1f}s, "
          f"loss {history[0]:.3f} -> {history[-1]:.3f}")

    dcfg = DecodeConfig(beam_size=1, top_k=1, max_decode_len=30)
    hits = 0
    for src_tokens, tgt_tokens in pairs:
        cand = greedy_decode(model, model.src_vocab.encode(src_tokens), dcfg)
        ok = list(cand.tokens) == tgt_tokens
        hits += ok
        if not ok:
            print(f"  miss: {' '.join(src_tokens)} -> {detokenize_target(tgt_tokens, 'p2g')} "
                  f"got {detokenize_target(cand.tokens, 'p2g')}")
    print(f"greedy exact match: {hits}/{len(pairs)} ({100 * hits / len(pairs):.1f}%)")


if __name__ == "__main__":
    main()

"""Greedy and beam-search decoding over any step scorer.

A scorer exposes ``step_log_probs(src_ids, prefixes) -> (n, V) array``,
``eos_id``, ``tgt_tokens`` and optionally ``forbidden_ids`` (special ids
never emitted). The trained transformer satisfies this; tests drive the
decoders with hand-built distributions.

Scores are raw sums of token log-probabilities (EOS included). A hypothesis
terminates on EOS or, flagged as truncated, at ``max_decode_len``. Pruning
ties break on score first, then lexicographically on token ids, so decoding
is fully deterministic.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .vocab import detokenize_target


class DecodeError(ValueError):
    pass


@dataclass
class DecodeConfig:
    beam_size: int = 10
    top_k: int = 5
    max_decode_len: int = 40
    length_penalty: float = 0.0
    merge_duplicates: bool = True

    def __post_init__(self) -> None:
        if self.max_decode_len < 1:
            raise DecodeError(f"max_decode_len must be >= 1, got {self.max_decode_len}")
        if not 1 <= self.top_k <= self.beam_size:
            raise DecodeError(
                f"need 1 <= top_k <= beam_size, got top_k={self.top_k} beam={self.beam_size}"
            )


@dataclass(frozen=True)
class Candidate:
    tokens: tuple[str, ...]
    score: float
    rank: int
    truncated: bool = False


def _masked_row(row: np.ndarray, forbidden: tuple[int, ...]) -> np.ndarray:
    if not forbidden:
        return row
    out = row.copy()
    out[list(forbidden)] = -np.inf
    return out


def _to_candidate(scorer, ids: tuple[int, ...], score: float, rank: int, truncated: bool) -> Candidate:
    tokens = tuple(scorer.tgt_tokens[i] for i in ids)
    return Candidate(tokens=tokens, score=score, rank=rank, truncated=truncated)


def greedy_decode(scorer, src_ids: Sequence[int], cfg: DecodeConfig | None = None) -> Candidate:
    """Argmax decoding; ties go to the lowest token id."""
    cfg = cfg or DecodeConfig()
    forbidden = tuple(getattr(scorer, "forbidden_ids", ()))
    prefix: list[int] = []
    score = 0.0
    truncated = True
    for _ in range(cfg.max_decode_len):
        row = _masked_row(scorer.step_log_probs(src_ids, [prefix])[0], forbidden)
        token = int(np.argmax(row))
        score += float(row[token])
        if token == scorer.eos_id:
            truncated = False
            break
        prefix.append(token)
    return _to_candidate(scorer, tuple(prefix), score, rank=1, truncated=truncated)


def beam_decode(scorer, src_ids: Sequence[int], cfg: DecodeConfig | None = None) -> list[Candidate]:
    """Standard beam search returning the pool's best ``top_k`` candidates.

    Finished hypotheses retire to a pool; hypotheses still active at
    ``max_decode_len`` retire truncated. With ``merge_duplicates`` the pool
    keeps only the best-scoring path per detokenized surface form.
    """
    cfg = cfg or DecodeConfig()
    forbidden = tuple(getattr(scorer, "forbidden_ids", ()))
    eos = scorer.eos_id
    # (score, ids); pool entries also carry the truncation flag
    active: list[tuple[float, tuple[int, ...]]] = [(0.0, ())]
    pool: list[tuple[float, tuple[int, ...], bool]] = []
    for _ in range(cfg.max_decode_len):
        rows = scorer.step_log_probs(src_ids, [list(ids) for _, ids in active])
        expansions: list[tuple[float, tuple[int, ...]]] = []
        for (score, ids), row in zip(active, rows):
            row = _masked_row(row, forbidden)
            for token, lp in enumerate(row):
                if lp == -np.inf:
                    continue
                expansions.append((score + float(lp), ids + (token,)))
        expansions.sort(key=lambda e: (-e[0], e[1]))
        kept = expansions[: cfg.beam_size]
        active = []
        for score, ids in kept:
            if ids[-1] == eos:
                pool.append((score, ids[:-1], False))
            else:
                active.append((score, ids))
        if not active:
            break
    for score, ids in active:
        pool.append((score, ids, True))
    return _rank_pool(scorer, pool, cfg)


def _effective(score: float, length: int, penalty: float) -> float:
    if penalty <= 0.0:
        return score
    return score / max(length, 1) ** penalty


def _rank_pool(scorer, pool, cfg: DecodeConfig) -> list[Candidate]:
    entries = []
    for score, ids, truncated in pool:
        surface = tuple(scorer.tgt_tokens[i] for i in ids)
        entries.append((score, ids, truncated, surface))
    if cfg.merge_duplicates:
        best: dict[tuple[str, ...], tuple] = {}
        for entry in sorted(entries, key=lambda e: (-e[0], e[1])):
            best.setdefault(entry[3], entry)
        entries = list(best.values())
    entries.sort(key=lambda e: (-_effective(e[0], len(e[1]), cfg.length_penalty), e[1]))
    return [
        Candidate(tokens=surface, score=score, rank=rank, truncated=truncated)
        for rank, (score, ids, truncated, surface) in enumerate(entries[: cfg.top_k], start=1)
    ]


def predict_topk(
    model,
    text: str,
    cfg: DecodeConfig | None = None,
    *,
    unknown: list[str] | None = None,
) -> list[tuple[str, float]]:
    """Decode one input string through a trained model.

    Tokenizes per the model's direction (phones for p2g, characters for
    g2p), maps unknown tokens to UNK (collected in ``unknown``), runs beam
    search, and detokenizes. Empty or all-unknown input is rejected.
    """
    cfg = cfg or DecodeConfig()
    from .vocab import tokenize_source  # local alias keeps import surface tidy

    tokens = tokenize_source(text, model.direction)
    if not tokens:
        raise DecodeError("empty input")
    missing = [t for t in tokens if t not in model.src_vocab]
    if unknown is not None:
        unknown.extend(missing)
    if len(missing) == len(tokens):
        raise DecodeError(f"no input token is in the model vocabulary: {text!r}")
    src_ids = model.src_vocab.encode(tokens)
    candidates = beam_decode(model, src_ids, cfg)
    return [(detokenize_target(c.tokens, model.direction), c.score) for c in candidates]


def candidates_to_tsv(input_text: str, candidates: Sequence[Candidate | tuple[str, float]]) -> list[str]:
    """Serialize ranked candidates as ``input<TAB>rank<TAB>output<TAB>score``."""
    lines = []
    for rank, cand in enumerate(candidates, start=1):
        if isinstance(cand, Candidate):
            out, score = "".join(cand.tokens), cand.score
        else:
            out, score = cand
        lines.append(f"{input_text}\t{rank}\t{out}\t{score:.6f}")
    return lines

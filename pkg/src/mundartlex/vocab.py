"""Token vocabularies shared by the p2g and g2p models.

The two directions use the same machinery with source and target swapped:
p2g reads space-separated phone tokens and writes single characters, g2p the
reverse. Specials occupy fixed low indices so checkpoints stay compatible.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

PAD, BOS, EOS, UNK = 0, 1, 2, 3
SPECIALS = ("<pad>", "<bos>", "<eos>", "<unk>")

DIRECTIONS = ("p2g", "g2p")


class VocabError(ValueError):
    pass


@dataclass(frozen=True)
class Vocab:
    tokens: tuple[str, ...]

    def __post_init__(self) -> None:
        if self.tokens[: len(SPECIALS)] != SPECIALS:
            raise VocabError("specials must occupy the first indices")
        if len(set(self.tokens)) != len(self.tokens):
            raise VocabError("duplicate tokens in vocabulary")

    def __len__(self) -> int:
        return len(self.tokens)

    def id(self, token: str) -> int:
        return self._lookup().get(token, UNK)

    def __contains__(self, token: str) -> bool:
        return token in self._lookup()

    def _lookup(self) -> dict[str, int]:
        # frozen dataclass: cache on the instance via object.__setattr__
        cached = getattr(self, "_lookup_cache", None)
        if cached is None:
            cached = {t: i for i, t in enumerate(self.tokens)}
            object.__setattr__(self, "_lookup_cache", cached)
        return cached

    def encode(self, tokens: Sequence[str]) -> list[int]:
        return [self.id(t) for t in tokens]

    def decode(self, ids: Iterable[int]) -> list[str]:
        return [self.tokens[i] for i in ids]


def build_vocab(token_seqs: Iterable[Sequence[str]]) -> Vocab:
    """Specials followed by distinct tokens in order of first appearance."""
    seen: dict[str, None] = {}
    for seq in token_seqs:
        for tok in seq:
            if tok not in seen:
                seen[tok] = None
    return Vocab(tokens=SPECIALS + tuple(seen))


def build_vocabs(pairs: Sequence[tuple[Sequence[str], Sequence[str]]]) -> tuple[Vocab, Vocab]:
    """Source and target vocabularies from tokenized training pairs.

    Dialect is never a token: pairs from all dialects feed one shared
    vocabulary pair.
    """
    if not pairs:
        raise VocabError("cannot build vocabularies from an empty pair list")
    src = build_vocab(s for s, _ in pairs)
    tgt = build_vocab(t for _, t in pairs)
    return src, tgt


def tokenize_source(text: str, direction: str) -> list[str]:
    _check_direction(direction)
    return text.split() if direction == "p2g" else list(text)


def tokenize_target(text: str, direction: str) -> list[str]:
    _check_direction(direction)
    return list(text) if direction == "p2g" else text.split()


def detokenize_target(tokens: Sequence[str], direction: str) -> str:
    _check_direction(direction)
    return "".join(tokens) if direction == "p2g" else " ".join(tokens)


def _check_direction(direction: str) -> None:
    if direction not in DIRECTIONS:
        raise VocabError(f"direction must be one of {DIRECTIONS}, got {direction!r}")


def load_pairs_tsv(path: str | Path, direction: str) -> list[tuple[list[str], list[str]]]:
    """Read training pairs from a ``src<TAB>tgt`` TSV and tokenize them."""
    _check_direction(direction)
    pairs: list[tuple[list[str], list[str]]] = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        cols = line.split("\t")
        if len(cols) < 2:
            raise VocabError(f"line {lineno}: expected src<TAB>tgt")
        src, tgt = cols[0], cols[1]
        pairs.append((tokenize_source(src, direction), tokenize_target(tgt, direction)))
    return pairs

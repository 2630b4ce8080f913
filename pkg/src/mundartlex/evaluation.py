"""Evaluation machinery: Levenshtein distance, exact-match reports, and
rank-accuracy tables built from human 0/1 tags.

Rank tables follow the top-5 tagging protocol: each evaluated item carries
one tag per candidate rank, the per-rank percentage is the share of 1-tags
at that rank, and the per-dialect total is the arithmetic mean over ranks.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Iterable, Sequence

from .lexicon import Dialect


class EvalError(ValueError):
    """Malformed tag data or inconsistent evaluation input."""


#: criteria codes justifying a 0-tag
REASON_CODES = ("ADDED_LETTER", "MISSING_LETTER", "CHANGED_LETTER", "TWO_MINOR")


def edit_distance(a: Sequence, b: Sequence) -> int:
    """Levenshtein distance with unit insert/delete/substitute costs.

    Works on any token sequences (strings compare per character).
    """
    n, m = len(a), len(b)
    if n > m:
        a, b, n, m = b, a, m, n
    prev = list(range(n + 1))
    for i in range(1, m + 1):
        cur = [i] + [0] * n
        bi = b[i - 1]
        for j in range(1, n + 1):
            cost = 0 if a[j - 1] == bi else 1
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + cost)
        prev = cur
    return prev[n]


def format_percent(value: float, places: int = 1) -> str:
    """Half-up rounding to ``places`` decimals, trailing zeros stripped."""
    q = Decimal(str(value)).quantize(Decimal(1).scaleb(-places), rounding=ROUND_HALF_UP)
    s = f"{q:f}"
    if "." in s:
        s = s.rstrip("0").rstrip(".")
    return s


@dataclass(frozen=True)
class TagRecord:
    """One human judgment of a ranked candidate."""

    headword: str
    dialect: Dialect
    rank: int
    candidate: str
    tag: int
    annotator: str
    reason: str | None = None

    def __post_init__(self) -> None:
        if self.tag not in (0, 1):
            raise EvalError(f"tag must be 0 or 1, got {self.tag!r}")
        if self.rank < 1:
            raise EvalError(f"rank must be >= 1, got {self.rank}")
        if self.reason is not None:
            if self.tag != 0:
                raise EvalError("reason is only allowed on 0-tags")
            if self.reason not in REASON_CODES:
                raise EvalError(f"unknown reason code {self.reason!r}")

    def to_json_dict(self) -> dict:
        d = {
            "headword": self.headword,
            "dialect": self.dialect.value,
            "rank": self.rank,
            "candidate": self.candidate,
            "tag": self.tag,
            "annotator": self.annotator,
        }
        if self.reason is not None:
            d["reason"] = self.reason
        return d

    @classmethod
    def from_json_dict(cls, d: dict) -> "TagRecord":
        try:
            dialect = Dialect(d["dialect"])
        except (KeyError, ValueError) as exc:
            raise EvalError(f"bad dialect in tag record: {d.get('dialect')!r}") from exc
        try:
            return cls(
                headword=d["headword"],
                dialect=dialect,
                rank=int(d["rank"]),
                candidate=d["candidate"],
                tag=int(d["tag"]),
                annotator=d["annotator"],
                reason=d.get("reason"),
            )
        except KeyError as exc:
            raise EvalError(f"missing field {exc} in tag record") from exc


def save_tags(records: Iterable[TagRecord], path: str | Path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_json_dict(), ensure_ascii=False) + "\n")


def load_tags(path: str | Path) -> list[TagRecord]:
    """Read a JSONL tags file; errors carry the offending line number."""
    path = Path(path)
    records: list[TagRecord] = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            d = json.loads(line)
        except json.JSONDecodeError as exc:
            raise EvalError(f"line {lineno}: malformed JSON ({exc.msg})") from exc
        try:
            records.append(TagRecord.from_json_dict(d))
        except EvalError as exc:
            raise EvalError(f"line {lineno}: {exc}") from exc
    return records


@dataclass
class RankColumn:
    """Per-dialect slice of a rank table."""

    n_items: int
    per_rank: list[float]  # percentage of 1-tags at rank r, index r-1

    @property
    def total(self) -> float:
        return sum(self.per_rank) / len(self.per_rank) if self.per_rank else 0.0


@dataclass
class RankTable:
    top_k: int
    columns: dict[Dialect, RankColumn] = field(default_factory=dict)

    def dialects(self) -> list[Dialect]:
        return [d for d in Dialect if d in self.columns]

    def as_json_dict(self) -> dict:
        return {
            "top_k": self.top_k,
            "dialects": {
                d.value: {
                    "items": col.n_items,
                    "per_rank": [format_percent(p, 1) for p in col.per_rank],
                    "total": format_percent(col.total, 2),
                }
                for d, col in self.columns.items()
            },
        }

    def as_tsv_lines(self) -> list[str]:
        lines = ["dialect\trow\tvalue"]
        for d in self.dialects():
            col = self.columns[d]
            lines.append(f"{d.value}\titems\t{col.n_items}")
            for r, pct in enumerate(col.per_rank, start=1):
                lines.append(f"{d.value}\t{r}\t{format_percent(pct, 1)}")
            lines.append(f"{d.value}\ttotal\t{format_percent(col.total, 2)}")
        return lines

    def as_text(self) -> str:
        dialects = self.dialects()
        if not dialects:
            return "no tags\n"
        header = [""] + [d.label for d in dialects]
        rows: list[list[str]] = []
        for r in range(1, self.top_k + 1):
            row = [_ordinal(r)]
            for d in dialects:
                row.append(format_percent(self.columns[d].per_rank[r - 1], 1))
            rows.append(row)
        rows.append(["Total"] + [format_percent(self.columns[d].total, 2) for d in dialects])
        rows.append(["items"] + [str(self.columns[d].n_items) for d in dialects])
        widths = [max(len(r[i]) for r in [header] + rows) for i in range(len(header))]
        out = []
        for row in [header] + rows:
            out.append("  ".join(cell.rjust(w) for cell, w in zip(row, widths)).rstrip())
        return "\n".join(out) + "\n"


def _ordinal(r: int) -> str:
    suffix = {1: "st", 2: "nd", 3: "rd"}.get(r if r < 20 else r % 10, "th")
    return f"{r}{suffix}"


def rank_accuracy(tags: Iterable[TagRecord], top_k: int = 5) -> RankTable:
    """Build a per-dialect rank table from tag records.

    Each (headword, dialect, annotator) item must carry exactly one tag per
    rank 1..top_k; incomplete or duplicated coverage raises EvalError naming
    the items. Annotators are pooled: every (item, annotator) pair counts as
    one evaluated row.
    """
    by_item: dict[tuple[str, Dialect, str], dict[int, int]] = {}
    for rec in tags:
        if not 1 <= rec.rank <= top_k:
            raise EvalError(f"rank {rec.rank} out of range 1..{top_k} for {rec.headword!r}")
        key = (rec.headword, rec.dialect, rec.annotator)
        ranks = by_item.setdefault(key, {})
        if rec.rank in ranks:
            raise EvalError(
                f"duplicate tag for {rec.headword!r}/{rec.dialect.value} rank {rec.rank} "
                f"by {rec.annotator!r}"
            )
        ranks[rec.rank] = rec.tag

    incomplete = sorted(
        f"{hw}/{d.value}/{ann}" for (hw, d, ann), ranks in by_item.items() if len(ranks) != top_k
    )
    if incomplete:
        raise EvalError("incomplete rank coverage for items: " + ", ".join(incomplete))

    table = RankTable(top_k=top_k)
    for dialect in Dialect:
        items = [ranks for (hw, d, ann), ranks in by_item.items() if d == dialect]
        if not items:
            continue
        n = len(items)
        per_rank = [(100 * sum(ranks[r] for ranks in items)) / n for r in range(1, top_k + 1)]
        table.columns[dialect] = RankColumn(n_items=n, per_rank=per_rank)
    return table


@dataclass
class MatchGroup:
    n_pairs: int
    n_exact: int
    mean_distance: float


@dataclass
class MatchReport:
    """Exact-match counts and mean edit distance, per group."""

    groups: dict[str, MatchGroup] = field(default_factory=dict)

    def as_tsv_lines(self) -> list[str]:
        lines = ["group\tpairs\texact\tmean_distance"]
        for name, g in self.groups.items():
            lines.append(f"{name}\t{g.n_pairs}\t{g.n_exact}\t{format_percent(g.mean_distance, 4)}")
        return lines

    def as_text(self) -> str:
        out = []
        for name, g in self.groups.items():
            out.append(
                f"{name}: {g.n_exact} exact of {g.n_pairs} pairs"
                f" (mean edit distance {format_percent(g.mean_distance, 4)})"
            )
        return "\n".join(out) + "\n"


def exact_match_report(
    pairs: Iterable[tuple[Dialect | None, Sequence, Sequence]],
) -> MatchReport:
    """Count distance-0 pairs, overall and per dialect.

    ``pairs`` yields (dialect, predicted tokens, reference tokens); the
    reference must be present. The "all" group covers every pair.
    """
    distances: list[int] = []
    by_dialect: dict[Dialect, list[int]] = {}
    for dialect, pred, ref in pairs:
        if ref is None:
            raise EvalError("missing reference sequence")
        d = edit_distance(pred, ref)
        distances.append(d)
        if dialect is not None:
            by_dialect.setdefault(dialect, []).append(d)

    def group(ds: list[int]) -> MatchGroup:
        n = len(ds)
        exact = sum(1 for d in ds if d == 0)
        return MatchGroup(n_pairs=n, n_exact=exact, mean_distance=(sum(ds) / n) if n else 0.0)

    report = MatchReport()
    report.groups["all"] = group(distances)
    for dialect in Dialect:
        if dialect in by_dialect:
            report.groups[dialect.value] = group(by_dialect[dialect])
    return report

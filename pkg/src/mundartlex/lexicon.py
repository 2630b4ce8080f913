"""Dictionary data model: headwords mapped to per-dialect SAMPA
pronunciations and spontaneous writings (GSWs), with TSV I/O, validation,
and boundary-marker insertion.

The canonical file format is a TSV with header
``headword<TAB>dialect<TAB>sampa<TAB>gsws`` where the SAMPA column is a
space-separated phone string and the gsws column holds ``|``-separated
writings (possibly empty). One row per (headword, dialect, pronunciation).
"""
from __future__ import annotations

import enum
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

from .phoneset import (
    BOUNDARY,
    BOUNDARY_PHONE,
    PhoneInventory,
    PhonesetError,
    ReductionRule,
    SampaSeq,
    format_sampa,
    parse_sampa,
    reduce_sequence,
)


class LexiconError(ValueError):
    """Malformed dictionary data."""


class Dialect(enum.Enum):
    """The six fixed dialect codes."""

    ZH = "ZH"
    SG = "SG"
    BS = "BS"
    BE = "BE"
    VS = "VS"
    NW = "NW"

    @property
    def label(self) -> str:
        return _DIALECT_LABELS[self]

    @classmethod
    def parse(cls, code: str) -> "Dialect":
        try:
            return cls(code)
        except ValueError:
            valid = ", ".join(d.value for d in cls)
            raise LexiconError(f"unknown dialect code {code!r} (expected one of {valid})")


_DIALECT_LABELS = {
    Dialect.ZH: "Zurich",
    Dialect.SG: "St. Gallen",
    Dialect.BS: "Basel",
    Dialect.BE: "Bern",
    Dialect.VS: "Visp",
    Dialect.NW: "Stans",
}


@dataclass(frozen=True)
class GswForm:
    """One written form. ``source`` records whether a human wrote it."""

    text: str
    source: str = "generated"  # manual | generated
    rank: int | None = None


@dataclass(frozen=True)
class DictEntry:
    headword: str
    dialect: Dialect
    sampa: SampaSeq
    gsws: tuple[GswForm, ...] = ()
    phoneset_version: str = "extended"

    @property
    def triple(self) -> tuple[str, str, str]:
        return (self.headword, self.dialect.value, format_sampa(self.sampa))


@dataclass
class Lexicon:
    entries: list[DictEntry]
    inventory: PhoneInventory
    duplicate_rows: int = 0
    index: dict[str, dict[Dialect, list[DictEntry]]] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        self.index = {}
        for entry in self.entries:
            self.index.setdefault(entry.headword, {}).setdefault(entry.dialect, []).append(entry)

    def __len__(self) -> int:
        return len(self.entries)

    def lookup(self, headword: str, dialect: Dialect | None = None) -> list[DictEntry]:
        by_dialect = self.index.get(headword, {})
        if dialect is not None:
            return list(by_dialect.get(dialect, []))
        return [e for entries in by_dialect.values() for e in entries]

    def signature(self) -> list[tuple]:
        """Order-insensitive content key, used for round-trip checks."""
        return sorted(
            (e.headword, e.dialect.value, format_sampa(e.sampa), tuple(g.text for g in e.gsws))
            for e in self.entries
        )


TSV_HEADER = ("headword", "dialect", "sampa", "gsws")


def load_lexicon(path: str | Path, inv: PhoneInventory) -> Lexicon:
    """Parse a dictionary TSV, validating every SAMPA against ``inv``.

    Duplicate (headword, dialect, sampa) rows are collapsed (their gsws
    merged in order) and counted on the returned lexicon.
    """
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines:
        return Lexicon(entries=[], inventory=inv)
    header = tuple(lines[0].split("\t"))
    if header != TSV_HEADER:
        raise LexiconError(f"bad header {header!r}, expected {TSV_HEADER!r}")

    by_triple: dict[tuple[str, str, str], DictEntry] = {}
    duplicates = 0
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cols = line.split("\t")
        if len(cols) != 4:
            raise LexiconError(f"line {lineno}: expected 4 columns, got {len(cols)}")
        headword, dialect_code, sampa_text, gsw_field = cols
        if not headword:
            raise LexiconError(f"line {lineno}: empty headword")
        try:
            dialect = Dialect.parse(dialect_code)
            sampa = parse_sampa(sampa_text, inv)
        except (LexiconError, PhonesetError) as exc:
            raise LexiconError(f"line {lineno}: {exc}") from exc
        gsws: list[GswForm] = []
        if gsw_field:
            for piece in gsw_field.split("|"):
                if not piece:
                    raise LexiconError(f"line {lineno}: empty GSW form in {gsw_field!r}")
                gsws.append(GswForm(text=piece))
        entry = DictEntry(
            headword=headword,
            dialect=dialect,
            sampa=sampa,
            gsws=tuple(gsws),
            phoneset_version=inv.name,
        )
        if entry.triple in by_triple:
            duplicates += 1
            old = by_triple[entry.triple]
            seen = {g.text for g in old.gsws}
            merged = old.gsws + tuple(g for g in entry.gsws if g.text not in seen)
            by_triple[entry.triple] = DictEntry(
                headword=old.headword,
                dialect=old.dialect,
                sampa=old.sampa,
                gsws=merged,
                phoneset_version=old.phoneset_version,
            )
        else:
            by_triple[entry.triple] = entry
    return Lexicon(entries=list(by_triple.values()), inventory=inv, duplicate_rows=duplicates)


#: validation check names, in report order
CHECKS = ("CASING", "DUPLICATE_TRIPLE", "EMPTY_GSW", "INVENTORY")


@dataclass
class ValidationReport:
    counts: dict[str, int]
    details: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(v == 0 for v in self.counts.values())

    def as_tsv_lines(self) -> list[str]:
        return [f"{check}\t{self.counts[check]}" for check in CHECKS]

    def as_text(self) -> str:
        lines = [f"{check}: {self.counts[check]}" for check in CHECKS]
        lines.append("ok" if self.ok else "violations found")
        if self.details:
            lines.extend("  " + d for d in self.details)
        return "\n".join(lines) + "\n"


def validate(lex: Lexicon) -> ValidationReport:
    """Report per-check violation counts; never raises.

    Checks: lowercase headwords and GSWs (CASING), unique
    (headword, dialect, sampa) triples (DUPLICATE_TRIPLE), non-empty
    well-trimmed distinct GSWs (EMPTY_GSW), and SAMPA membership in the
    lexicon's inventory (INVENTORY).
    """
    counts = dict.fromkeys(CHECKS, 0)
    details: list[str] = []

    def violation(check: str, message: str) -> None:
        counts[check] += 1
        details.append(f"{check}: {message}")

    seen_triples: set[tuple[str, str, str]] = set()
    for entry in lex.entries:
        where = f"{entry.headword!r}/{entry.dialect.value}"
        if not entry.headword or entry.headword != entry.headword.lower():
            violation("CASING", f"headword {entry.headword!r} is not lowercase")
        if entry.triple in seen_triples:
            violation("DUPLICATE_TRIPLE", f"duplicate entry {where} {format_sampa(entry.sampa)!r}")
        seen_triples.add(entry.triple)
        seen_gsws: set[str] = set()
        for gsw in entry.gsws:
            if not gsw.text.strip():
                violation("EMPTY_GSW", f"empty GSW on {where}")
                continue
            if gsw.text != gsw.text.strip() or "  " in gsw.text:
                violation("EMPTY_GSW", f"badly spaced GSW {gsw.text!r} on {where}")
            if gsw.text != gsw.text.lower():
                violation("CASING", f"GSW {gsw.text!r} on {where} is not lowercase")
            if gsw.text in seen_gsws:
                violation("EMPTY_GSW", f"duplicate GSW {gsw.text!r} on {where}")
            seen_gsws.add(gsw.text)
        if entry.phoneset_version != lex.inventory.name:
            violation(
                "INVENTORY",
                f"{where} declares phone set {entry.phoneset_version!r},"
                f" lexicon uses {lex.inventory.name!r}",
            )
        else:
            for phone in entry.sampa:
                if phone not in lex.inventory:
                    violation("INVENTORY", f"{where} uses phone {phone.symbol!r} not in inventory")
                    break
    return ValidationReport(counts=counts, details=details)


def insert_boundaries(sampa: SampaSeq, gsw: GswForm | str) -> SampaSeq:
    """Insert one boundary phone per space of the written form.

    Positions come from a character-level alignment: for a single space the
    split index minimizes the summed edit distance of the two (writing
    segment, concatenated SAMPA segment) pairs, case-folded, ties resolved
    leftmost; several spaces are placed left to right the same way. The
    result has exactly as many boundary markers as the writing has spaces,
    never adjacent and never at either end.
    """
    text = gsw.text if isinstance(gsw, GswForm) else gsw
    parts = text.split(" ")
    if any(p.symbol == BOUNDARY for p in sampa.phones):
        raise LexiconError("sequence already contains boundary markers")
    spaces = len(parts) - 1
    if spaces == 0:
        return sampa
    if "" in parts:
        raise LexiconError(f"badly spaced writing {text!r}")
    if spaces >= len(sampa.phones):
        raise LexiconError(
            f"{spaces} boundaries cannot separate {len(sampa.phones)} phones ({text!r})"
        )
    phones = _split_on_parts(list(sampa.phones), parts)
    return SampaSeq(tuple(phones), sampa.inventory_name)


def _split_on_parts(phones: list, parts: list[str]) -> list:
    from .evaluation import edit_distance  # local import; evaluation imports Dialect from here

    if len(parts) == 1:
        return phones
    head = parts[0].lower()
    rest = parts[1:]
    rest_chars = "".join(rest).lower()
    best_i = None
    best_cost = None
    # each remaining segment still needs at least one phone
    for i in range(1, len(phones) - len(rest) + 1):
        left = "".join(p.symbol for p in phones[:i]).lower()
        right = "".join(p.symbol for p in phones[i:]).lower()
        cost = edit_distance(head, left) + edit_distance(rest_chars, right)
        if best_cost is None or cost < best_cost:
            best_i, best_cost = i, cost
    assert best_i is not None
    return phones[:best_i] + [BOUNDARY_PHONE] + _split_on_parts(phones[best_i:], rest)


def render_rows(
    lex: Lexicon,
    phoneset: str = "extended",
    rules: tuple[ReductionRule, ...] | None = None,
    reduced: PhoneInventory | None = None,
) -> list[str]:
    """TSV lines (header included) for the dictionary, optionally reduced.

    Reduction failures propagate with the offending headword.
    """
    if phoneset not in ("extended", "reduced"):
        raise LexiconError(f"unknown phone set {phoneset!r}")
    rows = ["\t".join(TSV_HEADER)]
    for entry in lex.entries:
        sampa = entry.sampa
        if phoneset == "reduced":
            if rules is None or reduced is None:
                raise LexiconError("reduced export needs reduction rules and the reduced inventory")
            try:
                sampa = reduce_sequence(sampa, rules, reduced)
            except PhonesetError as exc:
                raise LexiconError(f"entry {entry.headword!r}: {exc}") from exc
        gsw_field = "|".join(g.text for g in entry.gsws)
        rows.append(
            "\t".join([entry.headword, entry.dialect.value, format_sampa(sampa), gsw_field])
        )
    return rows


def export_lexicon(
    lex: Lexicon,
    path: str | Path,
    phoneset: str = "extended",
    rules: tuple[ReductionRule, ...] | None = None,
    reduced: PhoneInventory | None = None,
) -> None:
    """Write the dictionary TSV atomically (temp file + rename)."""
    rows = render_rows(lex, phoneset, rules, reduced)
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write("\n".join(rows) + "\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise

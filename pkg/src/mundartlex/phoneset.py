"""SAMPA phone inventories, tokenization, and extended-to-reduced splitting.

An inventory is a named set of phone symbols loaded from a text file
(one symbol per line). SAMPA strings are space-separated and every token
must match an inventory symbol exactly; there is no segmentation of
unspaced input. The reduced set is obtained from the extended one by
splitting combined symbols (diphthongs, geminates, aspirated stops)
according to a rules file.
"""
from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path


class PhonesetError(ValueError):
    """Invalid inventory, rule set, or SAMPA string."""


#: in-sequence word-boundary marker; member of every inventory, never split
BOUNDARY = "_"

#: sentinel symbol unknown tokens map to in lenient parsing
UNK_SYMBOL = "<unk>"


@dataclass(frozen=True, order=True)
class Phone:
    symbol: str

    def __post_init__(self) -> None:
        if not self.symbol or any(c.isspace() for c in self.symbol):
            raise PhonesetError(
                f"phone symbol must be non-empty and contain no whitespace: {self.symbol!r}"
            )

    def __str__(self) -> str:
        return self.symbol


BOUNDARY_PHONE = Phone(BOUNDARY)
UNK_PHONE = Phone(UNK_SYMBOL)


@dataclass(frozen=True)
class PhoneInventory:
    """Immutable set of phones; iteration is lexicographic by symbol."""

    name: str
    phones: frozenset[Phone]
    version: str = "1"

    def __contains__(self, item: Phone | str) -> bool:
        if isinstance(item, str):
            item = Phone(item)
        return item in self.phones

    def __iter__(self):
        return iter(sorted(self.phones))

    def __len__(self) -> int:
        return len(self.phones)

    @property
    def symbols(self) -> tuple[str, ...]:
        return tuple(p.symbol for p in sorted(self.phones))


@dataclass(frozen=True)
class ReductionRule:
    """Split of one combined source symbol into reduced-set targets."""

    source: Phone
    targets: tuple[Phone, ...]

    def __post_init__(self) -> None:
        if not self.targets:
            raise PhonesetError(f"rule for {self.source} has no targets")


@dataclass(frozen=True)
class SampaSeq:
    """An ordered phone sequence tied to the inventory it was parsed against."""

    phones: tuple[Phone, ...]
    inventory_name: str

    def __len__(self) -> int:
        return len(self.phones)

    def __iter__(self):
        return iter(self.phones)

    @property
    def symbols(self) -> tuple[str, ...]:
        return tuple(p.symbol for p in self.phones)


def load_inventory(path: str | Path, name: str | None = None) -> PhoneInventory:
    """Read an inventory file: one symbol per line, ``#`` comments, blank
    lines ignored. The boundary marker is added if the file omits it.

    Raises PhonesetError naming the line on a duplicate symbol.
    """
    path = Path(path)
    version = "1"
    seen: dict[str, int] = {}
    phones: list[Phone] = []
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if line.startswith("#"):
            directive = line.lstrip("#").strip()
            if directive.lower().startswith("version:"):
                version = directive.split(":", 1)[1].strip()
            continue
        if not line:
            continue
        if line in seen:
            raise PhonesetError(f"duplicate symbol {line} at line {lineno} of {path}")
        seen[line] = lineno
        phones.append(Phone(line))
    if BOUNDARY not in seen:
        phones.append(BOUNDARY_PHONE)
    return PhoneInventory(name=name or path.stem, phones=frozenset(phones), version=version)


def load_rules(path: str | Path, reduced: PhoneInventory) -> tuple[ReductionRule, ...]:
    """Read a rules file with lines ``SOURCE<TAB>T1 T2 [T3...]``.

    Enforces single-pass closure: every target must belong to the reduced
    inventory and no source may appear among any rule's targets.
    """
    path = Path(path)
    rules: list[ReductionRule] = []
    sources: dict[str, int] = {}
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.rstrip("\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        if "\t" not in line:
            raise PhonesetError(f"malformed rule (no tab) at line {lineno} of {path}")
        src, tgt_field = line.split("\t", 1)
        src = src.strip()
        targets = tgt_field.split()
        if not src or not targets:
            raise PhonesetError(f"malformed rule at line {lineno} of {path}")
        if src in sources:
            raise PhonesetError(f"duplicate rule source {src} at line {lineno} of {path}")
        if src == BOUNDARY:
            raise PhonesetError(f"boundary marker may not be split (line {lineno} of {path})")
        for t in targets:
            if t not in reduced:
                raise PhonesetError(
                    f"rule target {t} at line {lineno} of {path} is not in the reduced inventory"
                )
        sources[src] = lineno
        rules.append(ReductionRule(Phone(src), tuple(Phone(t) for t in targets)))
    for rule in rules:
        for t in rule.targets:
            if t.symbol in sources:
                raise PhonesetError(
                    f"rule source {t.symbol} appears as a target; rules must be single-pass"
                )
    return tuple(rules)


def parse_sampa(
    text: str,
    inv: PhoneInventory,
    *,
    strict: bool = True,
    unknown: list[tuple[int, str]] | None = None,
) -> SampaSeq:
    """Tokenize a space-separated SAMPA string against ``inv``.

    In strict mode an unknown token (or empty input) raises PhonesetError
    carrying the token and its position. In lenient mode unknown tokens map
    to the UNK sentinel and are appended to ``unknown`` as (position, token).
    """
    tokens = text.split()
    if not tokens and strict:
        raise PhonesetError("empty SAMPA string")
    phones: list[Phone] = []
    for pos, tok in enumerate(tokens):
        if tok in inv:
            phones.append(Phone(tok))
        elif strict:
            raise PhonesetError(
                f"unknown phone {tok!r} at position {pos} (inventory {inv.name})"
            )
        else:
            phones.append(UNK_PHONE)
            if unknown is not None:
                unknown.append((pos, tok))
    return SampaSeq(tuple(phones), inv.name)


def reduce_sequence(
    seq: SampaSeq, rules: tuple[ReductionRule, ...] | list[ReductionRule], reduced: PhoneInventory
) -> SampaSeq:
    """Apply split rules to every phone of ``seq``.

    Phones with a matching rule are replaced by the rule's targets in order;
    all others pass through and must already belong to the reduced inventory.
    Single-pass closure of the rule set makes this idempotent.
    """
    by_source = {r.source.symbol: r.targets for r in rules}
    out: list[Phone] = []
    for phone in seq.phones:
        targets = by_source.get(phone.symbol)
        if targets is not None:
            out.extend(targets)
        elif phone in reduced:
            out.append(phone)
        else:
            raise PhonesetError(
                f"phone {phone.symbol} has no split rule and is not in inventory {reduced.name}"
            )
    return SampaSeq(tuple(out), reduced.name)


def format_sampa(seq: SampaSeq) -> str:
    """Render a sequence as a single-space-joined symbol string."""
    return " ".join(seq.symbols)


def default_data_path(filename: str) -> Path:
    """Path of a packaged data file (shipped inventories and rules)."""
    return Path(resources.files("mundartlex").joinpath("data", filename))  # type: ignore[arg-type]


def default_extended() -> PhoneInventory:
    return load_inventory(default_data_path("extended.txt"), name="extended")


def default_reduced() -> PhoneInventory:
    return load_inventory(default_data_path("reduced.txt"), name="reduced")


def default_rules(reduced: PhoneInventory | None = None) -> tuple[ReductionRule, ...]:
    return load_rules(default_data_path("rules.tsv"), reduced or default_reduced())

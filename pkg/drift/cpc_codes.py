# drift/cpc_codes.py
"""
CPC symbol parsing, green (Y02) detection and scheme-version diffs.

Symbols are compared on their parsed structure, never on raw text:
"Y02E  60/10" (official padded form) and "Y02E60/10" are the same symbol.
"""
import csv
import logging
import re
from collections import defaultdict
from dataclasses import dataclass, field
from functools import lru_cache

import pandas as pd

from drift.exceptions import DuplicateSymbol, MalformedSymbol, SchemaError

logger = logging.getLogger(__name__)

SECTIONS = "ABCDEFGHY"
LEVELS = ("section", "class", "subclass", "group")
SCHEME_COLUMNS = ["symbol", "indent_level", "title"]

_SYMBOL_RE = re.compile(
    r"^(?P<section>[A-Z])(?P<class_num>[0-9]{2})(?P<subclass>[A-Z])"
    r"(?:(?P<main_group>[^/]+)(?:/(?P<subgroup>.+))?)?$"
)
_WHITESPACE_RE = re.compile(r"\s+")
_DIGITS_RE = re.compile(r"[0-9]+")


@dataclass(frozen=True, order=True, slots=True)
class CpcSymbol:
    section: str
    class_num: int
    subclass: str
    main_group: int = 0
    subgroup: int = 0

    def __post_init__(self):
        if self.section not in SECTIONS or len(self.section) != 1:
            raise MalformedSymbol(f"Invalid CPC section {self.section!r}")
        if not 0 <= self.class_num <= 99:
            raise MalformedSymbol(f"Invalid CPC class {self.class_num!r}")
        if len(self.subclass) != 1 or not ("A" <= self.subclass <= "Z"):
            raise MalformedSymbol(f"Invalid CPC subclass {self.subclass!r}")
        if not 0 <= self.main_group <= 9999:
            raise MalformedSymbol(f"Main group out of range: {self.main_group}")
        if not 0 <= self.subgroup <= 999999:
            raise MalformedSymbol(f"Subgroup out of range: {self.subgroup}")
        if self.main_group == 0 and self.subgroup != 0:
            raise MalformedSymbol("Subgroup given without a main group")

    @property
    def is_subclass_level(self):
        return self.main_group == 0

    def __str__(self):
        return render_symbol(self)


@dataclass(frozen=True, slots=True)
class SchemeEntry:
    symbol: CpcSymbol
    title: str
    indent_level: int


@dataclass(frozen=True)
class SchemeDelta:
    subclass: str
    deleted: frozenset = field(default_factory=frozenset)
    added: frozenset = field(default_factory=frozenset)
    retitled: frozenset = field(default_factory=frozenset)
    indent_changed: frozenset = field(default_factory=frozenset)

    def is_empty(self):
        return not (self.deleted or self.added or self.retitled or self.indent_changed)

    def flags(self):
        """X marks: deleted, new, title changes, indentation changes."""
        return (bool(self.deleted), bool(self.added), bool(self.retitled), bool(self.indent_changed))

    def change_count(self):
        return len(self.deleted) + len(self.added) + len(self.retitled) + len(self.indent_changed)


def normalize(raw):
    return _WHITESPACE_RE.sub("", raw or "").upper()


def parse_symbol(raw):
    """Parse a CPC symbol in compact ("Y02E60/10") or padded ("Y02E  60/10") form."""
    if raw is None or not str(raw).strip():
        raise MalformedSymbol("Empty CPC symbol")
    return _parse_normalized(normalize(str(raw)))


@lru_cache(maxsize=1 << 20)
def _parse_normalized(text):
    match = _SYMBOL_RE.match(text)
    if not match:
        raise MalformedSymbol(f"Malformed CPC symbol {text!r}")

    main_group = match.group("main_group")
    subgroup = match.group("subgroup")
    if main_group is not None and not _DIGITS_RE.fullmatch(main_group):
        raise MalformedSymbol(f"Non-numeric main group in {text!r}")
    if subgroup is not None and not _DIGITS_RE.fullmatch(subgroup):
        raise MalformedSymbol(f"Non-numeric subgroup in {text!r}")

    symbol = CpcSymbol(
        section=match.group("section"),
        class_num=int(match.group("class_num")),
        subclass=match.group("subclass"),
        main_group=int(main_group) if main_group else 0,
        subgroup=int(subgroup) if subgroup else 0,
    )
    if main_group is not None and symbol.main_group == 0:
        raise MalformedSymbol(f"Main group must be 1-9999 in {text!r}")
    return symbol


def render_symbol(s, padded=False):
    subclass = f"{s.section}{s.class_num:02d}{s.subclass}"
    if s.main_group == 0:
        return subclass
    group = f"{s.main_group:>4d}" if padded else str(s.main_group)
    return f"{subclass}{group}/{s.subgroup:02d}"


def is_green(s):
    return s.section == "Y" and s.class_num == 2


def truncate(s, level):
    if level == "section":
        return s.section
    if level == "class":
        return f"{s.section}{s.class_num:02d}"
    if level == "subclass":
        return f"{s.section}{s.class_num:02d}{s.subclass}"
    if level == "group":
        head = f"{s.section}{s.class_num:02d}{s.subclass}"
        return head if s.main_group == 0 else f"{head}{s.main_group}"
    raise ValueError(f"Unknown truncation level {level!r}; expected one of {LEVELS}")


def green_groups(symbols):
    return {truncate(s, "group") for s in symbols if is_green(s)}


# --- scheme files -----------------------------------------------------------

def read_scheme(path):
    """Read a scheme TSV (symbol, indent_level, title) into SchemeEntry rows."""
    df = pd.read_csv(
        path, sep="\t", dtype=str, keep_default_na=False,
        quoting=csv.QUOTE_NONE, encoding="utf-8",
    )
    if list(df.columns) != SCHEME_COLUMNS:
        raise SchemaError(
            f"{path}: expected header {SCHEME_COLUMNS}, got {list(df.columns)}"
        )

    entries = []
    seen = set()
    for line_no, (raw_symbol, raw_level, title) in enumerate(df.itertuples(index=False), start=2):
        symbol = parse_symbol(raw_symbol)
        if symbol in seen:
            raise DuplicateSymbol(f"{path}:{line_no}: {render_symbol(symbol)} listed twice")
        seen.add(symbol)
        try:
            level = int(raw_level)
        except ValueError:
            raise SchemaError(f"{path}:{line_no}: indent_level {raw_level!r} is not an integer")
        if level < 0:
            raise SchemaError(f"{path}:{line_no}: negative indent_level")
        entries.append(SchemeEntry(symbol=symbol, title=title, indent_level=level))

    check_indentation(entries)
    logger.info(f"Read {len(entries)} scheme entries from {path}")
    return entries


def check_indentation(entries):
    """Subgroups must be indented deeper than their main group."""
    main_levels = {
        (e.symbol.section, e.symbol.class_num, e.symbol.subclass, e.symbol.main_group): e.indent_level
        for e in entries
        if e.symbol.main_group and e.symbol.subgroup == 0
    }
    for e in entries:
        if e.symbol.subgroup == 0:
            continue
        key = (e.symbol.section, e.symbol.class_num, e.symbol.subclass, e.symbol.main_group)
        parent = main_levels.get(key)
        if parent is not None and e.indent_level <= parent:
            raise SchemaError(
                f"{render_symbol(e.symbol)} is not indented below its main group"
            )


def _index_scheme(entries, label):
    index = {}
    for entry in entries:
        if entry.symbol in index:
            raise DuplicateSymbol(f"{label} scheme lists {render_symbol(entry.symbol)} twice")
        index[entry.symbol] = entry
    return index


def scheme_diff(old_scheme, new_scheme):
    """Compare two scheme versions, one SchemeDelta per affected subclass."""
    old = _index_scheme(old_scheme, "old")
    new = _index_scheme(new_scheme, "new")

    buckets = defaultdict(lambda: defaultdict(set))
    for symbol in old.keys() - new.keys():
        buckets[truncate(symbol, "subclass")]["deleted"].add(symbol)
    for symbol in new.keys() - old.keys():
        buckets[truncate(symbol, "subclass")]["added"].add(symbol)
    for symbol in old.keys() & new.keys():
        before, after = old[symbol], new[symbol]
        if before.title != after.title:
            buckets[truncate(symbol, "subclass")]["retitled"].add(symbol)
        if before.indent_level != after.indent_level:
            buckets[truncate(symbol, "subclass")]["indent_changed"].add(symbol)

    deltas = [
        SchemeDelta(
            subclass=subclass,
            deleted=frozenset(sets["deleted"]),
            added=frozenset(sets["added"]),
            retitled=frozenset(sets["retitled"]),
            indent_changed=frozenset(sets["indent_changed"]),
        )
        for subclass, sets in sorted(buckets.items())
    ]
    return [d for d in deltas if not d.is_empty()]


def delta_frame(deltas):
    """One row per subclass: X marks plus per-field counts."""
    rows = []
    for d in deltas:
        deleted, added, retitled, indented = d.flags()
        rows.append({
            "subclass": d.subclass,
            "deleted_codes": "X" if deleted else "",
            "new_codes": "X" if added else "",
            "titles_changes": "X" if retitled else "",
            "indentation_changes": "X" if indented else "",
            "n_deleted": len(d.deleted),
            "n_added": len(d.added),
            "n_retitled": len(d.retitled),
            "n_indent_changed": len(d.indent_changed),
        })
    columns = [
        "subclass", "deleted_codes", "new_codes", "titles_changes", "indentation_changes",
        "n_deleted", "n_added", "n_retitled", "n_indent_changed",
    ]
    return pd.DataFrame(rows, columns=columns)

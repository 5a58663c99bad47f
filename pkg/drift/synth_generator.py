# drift/synth_generator.py
"""
Paired synthetic snapshots with planted ground truth.

Labels are drawn first (manifest-first) and the snapshot files are then
rendered from them, so group sizes, forward-citation counts and class
migrations in the manifest are exact by construction. One numpy random
stream per run keeps the output byte-identical for a fixed seed.
"""
import json
import logging
from dataclasses import asdict, dataclass, field, fields
from datetime import date
from pathlib import Path

import numpy as np
import pandas as pd

from drift.cpc_codes import parse_symbol, render_symbol
from drift.exceptions import ConfigError
from drift.snapshot_ingest import APPLICATION_COLUMNS, CITATION_COLUMNS, CLASSIFICATION_COLUMNS

logger = logging.getLogger(__name__)

MANIFEST_COLUMNS = [
    "family_id", "group", "is_green_old", "is_green_new", "offices", "earliest_year", "fwd_cit_5y_planted",
]
LABELS = ("A", "B", "C", "D", "N", "W")

DEFAULT_OFFICE_WEIGHTS = {
    "US": 0.22, "CN": 0.20, "JP": 0.17, "KR": 0.08, "EP": 0.10,
    "WO": 0.10, "DE": 0.06, "CA": 0.03, "TW": 0.02, "AU": 0.02,
}
ASIAN_OFFICES = ("JP", "CN", "KR")

# Y02 groups, heaviest first
GREEN_SYMBOLS = tuple(parse_symbol(s) for s in (
    "Y02E60/10", "Y02P70/50", "Y02E10/50", "Y02E30/30", "Y02T10/70", "Y02B30/00",
    "Y02A40/10", "Y02C20/40", "Y02D10/00", "Y02W30/20", "Y02P20/133", "Y02E40/60",
))
GREEN_WEIGHTS = np.array([0.22, 0.14, 0.13, 0.08, 0.08, 0.07, 0.06, 0.04, 0.05, 0.05, 0.04, 0.04])

# technology subclasses; popularity follows a power law over this order
BASE_SUBCLASSES = tuple(
    f"{section}{class_num:02d}{sub}"
    for section in "ABCDEFGH"
    for class_num in (1, 4, 21, 47)
    for sub in "BFJN"
)

CITATION_LAG_YEARS = 5
NOISE_RATE = 0.1
EXTRA_GREEN_RATE = 0.1


@dataclass
class GeneratorConfig:
    seed: int = 0
    n_families: int = 1000
    green_share: float = 0.2
    reclass_rate: float = 0.092
    expansion_rate: float = 0.106
    green_to_nongreen_rate: float = 0.01
    year_range: tuple = (1980, 2016)
    year_growth: float = 0.08
    office_weights: dict = field(default_factory=lambda: dict(DEFAULT_OFFICE_WEIGHTS))
    members_per_family: dict = field(default_factory=lambda: {"min": 1, "zipf_a": 2.2, "max": 12})
    citation_intensity: float = 1.5
    class_size_exponent: float = 1.2
    asian_expansion_share: float = 0.6
    late_member_rate: float = 0.1
    old_citation_coverage: float = 0.8
    class_migration_rate: float = 0.01
    withdrawn_rate: float = 0.0
    churn_rate: float = 0.0

    def __post_init__(self):
        self.year_range = tuple(self.year_range)
        self.validate()

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"Unknown generator settings: {', '.join(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(f"Invalid generator config: {exc}")

    @classmethod
    def from_file(cls, path):
        try:
            with open(path, encoding="utf-8") as handle:
                data = json.load(handle)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"Cannot read generator config {path}: {exc}")
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: generator config must be a JSON object")
        return cls.from_dict(data)

    def as_dict(self):
        payload = asdict(self)
        payload["year_range"] = list(self.year_range)
        return payload

    def validate(self):
        ratios = (
            "green_share", "reclass_rate", "expansion_rate", "green_to_nongreen_rate",
            "asian_expansion_share", "late_member_rate", "old_citation_coverage",
            "class_migration_rate", "withdrawn_rate", "churn_rate",
        )
        for name in ratios:
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not 0 <= value <= 1:
                raise ConfigError(f"{name} must be a ratio in [0, 1], got {value!r}")
        for name in ("reclass_rate", "expansion_rate", "green_to_nongreen_rate"):
            if getattr(self, name) >= 1:
                raise ConfigError(f"{name} must be below 1")
        if not isinstance(self.n_families, int) or self.n_families < 0:
            raise ConfigError(f"n_families must be a non-negative integer, got {self.n_families!r}")
        if len(self.year_range) != 2 or self.year_range[0] > self.year_range[1]:
            raise ConfigError(f"year_range must be [start, end] with start <= end, got {self.year_range!r}")
        weights = self.office_weights
        if not weights or any(w < 0 for w in weights.values()) or sum(weights.values()) <= 0:
            raise ConfigError("office_weights must be non-negative and not all zero")
        for office in weights:
            if not (isinstance(office, str) and len(office) == 2 and office.isalpha() and office.isupper()):
                raise ConfigError(f"Office codes must be two uppercase letters, got {office!r}")
        members = self.members_per_family
        try:
            low, high, zipf_a = int(members["min"]), int(members["max"]), float(members["zipf_a"])
        except (KeyError, TypeError, ValueError):
            raise ConfigError("members_per_family needs numeric min, max and zipf_a")
        if low < 1 or high < low or zipf_a <= 1:
            raise ConfigError("members_per_family needs 1 <= min <= max and zipf_a > 1")
        if self.citation_intensity < 0 or self.class_size_exponent < 0:
            raise ConfigError("citation_intensity and class_size_exponent must be non-negative")


@dataclass
class GroundTruth:
    labels: dict                  # family_id -> A/B/C/D/N/W
    is_green_old: dict
    is_green_new: dict
    offices: dict                 # family_id -> sorted offices (new snapshot, old for W)
    earliest_year: dict
    planted_citations: dict       # family_id -> distinct citing families within the lag window (new snapshot)
    migrated: frozenset = frozenset()
    emitted_rows: dict = field(default_factory=dict)

    def group_sizes(self):
        sizes = dict.fromkeys(LABELS, 0)
        for label in self.labels.values():
            sizes[label] += 1
        return sizes

    def families_in(self, label):
        return {fid for fid, value in self.labels.items() if value == label}

    def manifest_frame(self):
        rows = [
            {
                "family_id": fid,
                "group": self.labels[fid],
                "is_green_old": int(self.is_green_old[fid]),
                "is_green_new": int(self.is_green_new[fid]),
                "offices": ";".join(self.offices[fid]),
                "earliest_year": self.earliest_year[fid],
                "fwd_cit_5y_planted": self.planted_citations.get(fid, 0),
            }
            for fid in sorted(self.labels)
        ]
        return pd.DataFrame(rows, columns=MANIFEST_COLUMNS)

    def summary(self):
        return {
            "group_sizes": self.group_sizes(),
            "migrated_families": len(self.migrated),
            "emitted_rows": self.emitted_rows,
        }


@dataclass
class SyntheticPair:
    config: GeneratorConfig
    old: dict   # table name -> DataFrame in the snapshot_ingest schemas
    new: dict
    truth: GroundTruth


@dataclass
class _Family:
    index: int
    label: str
    family_id: int
    new_family_id: int
    earliest_year: int
    members: list = field(default_factory=list)        # (appln_id, office, ordinal)
    late_members: list = field(default_factory=list)   # new snapshot only
    base_old: object = None
    base_new: object = None
    green: tuple = ()

    @property
    def in_old(self):
        return self.label != "D"

    @property
    def in_new(self):
        return self.label != "W"


def _planted_counts(config, n_new):
    """Group sizes: C/(B+C) = reclass_rate, D/(B+D) = expansion_rate, A/(A+B) = green_to_nongreen_rate."""
    r, e, q = config.reclass_rate, config.expansion_rate, config.green_to_nongreen_rate
    green_total = round(config.green_share * n_new)
    base = green_total / (1 + r / (1 - r) + e / (1 - e)) if green_total else 0.0
    c = round(base * r / (1 - r))
    d = round(base * e / (1 - e))
    b = green_total - c - d
    a = round(b * q / (1 - q))
    n = n_new - green_total - a
    if b < 0 or n < 0:
        raise ConfigError(
            f"green_share={config.green_share} with the configured rates leaves no room for "
            f"{'group B' if b < 0 else 'non-green families'}"
        )
    return {"A": a, "B": b, "C": c, "D": d, "N": n}


def _base_symbol(rng, subclass):
    return parse_symbol(f"{subclass}{int(rng.integers(1, 40))}/{int(rng.choice([0, 2, 4, 10, 16]))}")


def generate(config):
    rng = np.random.default_rng(config.seed)
    n = config.n_families
    withdrawn = round(config.withdrawn_rate * n)
    counts = _planted_counts(config, n - withdrawn)
    counts["W"] = withdrawn
    labels = np.array([label for label in LABELS for _ in range(counts[label])], dtype="U1")
    labels = labels[rng.permutation(len(labels))] if len(labels) else labels

    start, end = config.year_range
    years = np.arange(start, end + 1)
    year_weights = np.exp(config.year_growth * (years - start))
    year_weights /= year_weights.sum()

    offices = sorted(config.office_weights)
    office_p = np.array([config.office_weights[o] for o in offices], dtype=float)
    office_p /= office_p.sum()
    asian = [o for o in ASIAN_OFFICES]

    class_p = np.arange(1, len(BASE_SUBCLASSES) + 1, dtype=float) ** -config.class_size_exponent
    class_p /= class_p.sum()

    low = int(config.members_per_family["min"])
    high = int(config.members_per_family["max"])
    zipf_a = float(config.members_per_family["zipf_a"])

    earliest = rng.choice(years, size=n, p=year_weights) if n else np.empty(0, dtype=int)
    sizes = np.minimum(high, low - 1 + rng.zipf(zipf_a, size=n)) if n else np.empty(0, dtype=int)
    base_classes = rng.choice(len(BASE_SUBCLASSES), size=n, p=class_p) if n else np.empty(0, dtype=int)

    # churn: some B families get a new family_id in the new snapshot
    b_positions = np.flatnonzero(labels == "B")
    n_churn = round(config.churn_rate * len(b_positions))
    churned = set(rng.choice(b_positions, size=n_churn, replace=False).tolist()) if n_churn else set()

    families = []
    next_appln = 1
    next_churn_id = n + 1
    for i in range(n):
        label = str(labels[i])
        family_id = i + 1
        new_family_id = family_id
        if i in churned:
            new_family_id = next_churn_id
            next_churn_id += 1
        family = _Family(index=i, label=label, family_id=family_id, new_family_id=new_family_id,
                         earliest_year=int(earliest[i]))

        pool = asian if label == "D" and rng.random() < config.asian_expansion_share else offices
        pool_p = None if pool is asian else office_p
        first = date(family.earliest_year, 1, 1).toordinal() + int(rng.integers(0, 365))
        for k in range(int(sizes[i])):
            office = str(rng.choice(pool, p=pool_p))
            ordinal = first if k == 0 else first + int(rng.integers(0, 3 * 365))
            family.members.append((next_appln, office, ordinal))
            next_appln += 1
        if family.in_old and family.in_new and rng.random() < config.late_member_rate:
            office = str(rng.choice(offices, p=office_p))
            family.late_members.append((next_appln, office, first + int(rng.integers(365, 4 * 365))))
            next_appln += 1

        family.base_old = family.base_new = _base_symbol(rng, BASE_SUBCLASSES[base_classes[i]])
        green = [GREEN_SYMBOLS[int(rng.choice(len(GREEN_SYMBOLS), p=GREEN_WEIGHTS / GREEN_WEIGHTS.sum()))]]
        if rng.random() < EXTRA_GREEN_RATE:
            extra = GREEN_SYMBOLS[int(rng.integers(0, len(GREEN_SYMBOLS)))]
            if extra not in green:
                green.append(extra)
        family.green = tuple(green)
        if label == "W" and rng.random() >= config.green_share:
            family.green = ()
        families.append(family)

    # class migration among families present in both snapshots under the same id
    common = [f.index for f in families if f.in_old and f.in_new and f.family_id == f.new_family_id]
    n_migrate = round(config.class_migration_rate * len(common))
    migrated = set()
    if n_migrate:
        for i in sorted(rng.choice(common, size=n_migrate, replace=False).tolist()):
            family = families[i]
            current = render_symbol(family.base_old)[:3]
            targets = [s for s in BASE_SUBCLASSES if s[:3] != current]
            family.base_new = _base_symbol(rng, targets[int(rng.integers(0, len(targets)))])
            migrated.add(family.family_id)

    planted, citations_new, citations_old = _plant_citations(rng, families, config)
    old_tables, new_tables = _render(families, citations_old, citations_new)

    truth = _ground_truth(families, planted, migrated)
    truth.emitted_rows = {
        "old": {name: len(df) for name, df in old_tables.items()},
        "new": {name: len(df) for name, df in new_tables.items()},
    }
    logger.info(f"Generated synthetic pair (seed={config.seed}): {truth.group_sizes()}")
    return SyntheticPair(config=config, old=old_tables, new=new_tables, truth=truth)


def _green_old(family):
    return bool(family.green) and family.label in ("A", "B", "W")


def _green_new(family):
    return bool(family.green) and family.label in ("B", "C", "D")


def _plant_citations(rng, families, config):
    """Citation rows for both snapshots plus the planted per-family count (new snapshot)."""
    visible = [f for f in families if f.in_new]
    by_year = {}
    for f in visible:
        by_year.setdefault(f.earliest_year, []).append(f.index)
    start, end = config.year_range

    def candidates(first, last):
        pool = []
        for year in range(first, last + 1):
            pool.extend(by_year.get(year, ()))
        return pool

    forward = {y: candidates(y, y + CITATION_LAG_YEARS) for y in range(start, end + 1)}
    too_late = {y: candidates(y + CITATION_LAG_YEARS + 1, end) for y in range(start, end + 1)}
    too_early = {y: candidates(start, y - 1) for y in range(start, end + 1)}

    def new_members(f):
        return f.members + f.late_members

    def pick(members):
        return members[int(rng.integers(0, len(members)))][0]

    rows_new, planted = [], {}
    for f in visible:
        pool = forward[f.earliest_year]
        k = int(rng.poisson(config.citation_intensity))
        citing = set()
        if pool and k:
            citing = {pool[j] for j in rng.integers(0, len(pool), size=k).tolist()} - {f.index}
        planted[f.new_family_id] = len(citing)
        for g in sorted(citing):
            rows_new.append((pick(new_members(families[g])), pick(new_members(f))))

        # rows that must not count: outside the lag window, intra-family, repeated
        if too_late[f.earliest_year] and rng.random() < NOISE_RATE:
            g = too_late[f.earliest_year][int(rng.integers(0, len(too_late[f.earliest_year])))]
            rows_new.append((pick(new_members(families[g])), pick(new_members(f))))
        if too_early[f.earliest_year] and rng.random() < NOISE_RATE:
            g = too_early[f.earliest_year][int(rng.integers(0, len(too_early[f.earliest_year])))]
            rows_new.append((pick(new_members(families[g])), pick(new_members(f))))
        members = new_members(f)
        if len(members) > 1 and rng.random() < NOISE_RATE:
            a, b = rng.choice(len(members), size=2, replace=False).tolist()
            rows_new.append((members[a][0], members[b][0]))
        if rows_new and rng.random() < NOISE_RATE / 2:
            rows_new.append(rows_new[int(rng.integers(0, len(rows_new)))])

    in_old = set()
    for f in families:
        if f.in_old:
            in_old.update(m[0] for m in f.members)
    rows_old = [
        row for row in rows_new
        if row[0] in in_old and row[1] in in_old and rng.random() < config.old_citation_coverage
    ]
    return planted, rows_new, rows_old


def _render(families, citations_old, citations_new):
    apps = {"old": [], "new": []}
    cls = {"old": [], "new": []}
    for f in families:
        for snapshot in ("old", "new"):
            if snapshot == "old" and not f.in_old:
                continue
            if snapshot == "new" and not f.in_new:
                continue
            family_id = f.family_id if snapshot == "old" else f.new_family_id
            base = f.base_old if snapshot == "old" else f.base_new
            green = _green_old(f) if snapshot == "old" else _green_new(f)
            members = f.members if snapshot == "old" else f.members + f.late_members
            for position, (appln_id, office, ordinal) in enumerate(members):
                apps[snapshot].append((appln_id, family_id, office, date.fromordinal(ordinal).isoformat()))
                symbols = [base]
                if green and position == 0:
                    symbols.extend(f.green)
                for symbol in symbols:
                    cls[snapshot].append((appln_id, render_symbol(symbol, padded=appln_id % 5 == 0)))

    def tables(snapshot, citations):
        return {
            "applications": pd.DataFrame(sorted(apps[snapshot]), columns=APPLICATION_COLUMNS),
            "classifications": pd.DataFrame(sorted(cls[snapshot]), columns=CLASSIFICATION_COLUMNS),
            "citations": pd.DataFrame(citations, columns=CITATION_COLUMNS),
        }

    return tables("old", citations_old), tables("new", citations_new)


def _ground_truth(families, planted, migrated):
    labels, green_old, green_new, offices, years = {}, {}, {}, {}, {}

    def record(fid, label, is_old, is_new, members, year):
        labels[fid] = label
        green_old[fid] = is_old
        green_new[fid] = is_new
        offices[fid] = sorted({m[1] for m in members})
        years[fid] = year

    for f in families:
        if f.family_id != f.new_family_id:
            # renumbered: the old id disappears, the new id shows up as set expansion
            record(f.family_id, "W", True, False, f.members, f.earliest_year)
            record(f.new_family_id, "D", False, True, f.members + f.late_members, f.earliest_year)
            continue
        members = f.members if f.label == "W" else f.members + f.late_members
        record(f.family_id, f.label, _green_old(f), _green_new(f), members, f.earliest_year)

    return GroundTruth(
        labels=labels,
        is_green_old=green_old,
        is_green_new=green_new,
        offices=offices,
        earliest_year=years,
        planted_citations={fid: n for fid, n in planted.items()},
        migrated=frozenset(migrated),
    )


def write_pair(pair, out_dir):
    """old/ and new/ snapshot TSVs, manifest.csv and ground_truth.json; returns the written paths."""
    out_dir = Path(out_dir)
    written = []
    for snapshot, tables in (("old", pair.old), ("new", pair.new)):
        folder = out_dir / snapshot
        folder.mkdir(parents=True, exist_ok=True)
        for name, df in tables.items():
            path = folder / f"{name}.tsv"
            df.to_csv(path, sep="\t", index=False, lineterminator="\n")
            written.append(path)

    manifest = out_dir / "manifest.csv"
    pair.truth.manifest_frame().to_csv(manifest, index=False, lineterminator="\n")
    written.append(manifest)

    summary = out_dir / "ground_truth.json"
    payload = {"config": pair.config.as_dict(), **pair.truth.summary()}
    summary.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    written.append(summary)
    logger.info(f"Wrote synthetic pair to {out_dir}")
    return written

# drift/effect_decomposition.py
"""
Two-snapshot decomposition of green families.

    A  green in old, not green in new          (present in both)
    B  green in both                            (present in both)
    C  not green in old, green in new           (present in both)  reclassification
    D  green in new, absent from old            (new only)         set expansion

Families are matched by family_id. Window membership is decided by the new
snapshot's earliest year whenever a family exists there.
"""
import logging
from collections import Counter
from contextlib import nullcontext
from dataclasses import dataclass
from importlib import resources

import pandas as pd

from drift.exceptions import InvariantViolation, SchemaError, ZeroDenominator
from drift.family_builder import ALL_FILTERS, FamilyRecord, QualityFilter, apply_filter, green_families, in_window

logger = logging.getLogger(__name__)

GROUPS = ("A", "B", "C", "D")
TABLE2_COLUMNS = ["filter", "count_2019", "count_2023", "reclassification", "set_expansion"]


@dataclass(frozen=True)
class EffectPartition:
    window: tuple
    group_a: frozenset
    group_b: frozenset
    group_c: frozenset
    group_d: frozenset
    histograms: dict
    expansion_outside_window: int = 0
    old_only: int = 0
    vanished_green: int = 0
    window_disagreements: int = 0

    def group(self, name):
        return {"A": self.group_a, "B": self.group_b, "C": self.group_c, "D": self.group_d}[name.upper()]

    @property
    def n_reclassified(self):
        return len(self.group_c)

    @property
    def n_expansion(self):
        return len(self.group_d)

    def sizes(self):
        return {name: len(self.group(name)) for name in GROUPS}

    def diagnostics(self):
        return {
            "window": list(self.window),
            "group_sizes": self.sizes(),
            "expansion_outside_window": self.expansion_outside_window,
            "old_only": self.old_only,
            "vanished_green": self.vanished_green,
            "window_disagreements": self.window_disagreements,
        }


@dataclass(frozen=True)
class CombinationRow:
    filter: QualityFilter
    count_old: int
    count_new: int
    count_reclass: int
    count_expansion: int

    @property
    def n_reclassified(self):
        return self.count_reclass

    @property
    def n_expansion(self):
        return self.count_expansion

    def as_dict(self):
        return {
            "filter": self.filter.label,
            "count_2019": self.count_old,
            "count_2023": self.count_new,
            "reclassification": self.count_reclass,
            "set_expansion": self.count_expansion,
        }


def _in(window, year):
    return window[0] <= year <= window[1]


def decompose(old_families, new_families, window):
    start, end = window
    if start > end:
        raise ValueError(f"Invalid window {window}")

    group_a, group_b, group_c, group_d = set(), set(), set(), set()
    expansion_outside = 0
    disagreements = 0

    for fid, new in new_families.items():
        old = old_families.get(fid)
        if old is None:
            if new.is_green:
                if _in(window, new.earliest_year):
                    group_d.add(fid)
                else:
                    expansion_outside += 1
            continue
        new_in = _in(window, new.earliest_year)
        if new_in != _in(window, old.earliest_year):
            disagreements += 1
        if not new_in:
            continue
        if old.is_green and new.is_green:
            group_b.add(fid)
        elif old.is_green:
            group_a.add(fid)
        elif new.is_green:
            group_c.add(fid)

    old_only = [f for fid, f in old_families.items() if fid not in new_families]
    vanished = sum(1 for f in old_only if f.is_green and _in(window, f.earliest_year))

    histograms = {
        name: Counter(new_families[fid].earliest_year for fid in members)
        for name, members in zip(GROUPS, (group_a, group_b, group_c, group_d))
    }
    partition = EffectPartition(
        window=(start, end),
        group_a=frozenset(group_a),
        group_b=frozenset(group_b),
        group_c=frozenset(group_c),
        group_d=frozenset(group_d),
        histograms=histograms,
        expansion_outside_window=expansion_outside,
        old_only=len(old_only),
        vanished_green=vanished,
        window_disagreements=disagreements,
    )
    check_partition(partition, new_families)

    logger.info(
        f"Partition over {start}-{end}: A={len(group_a)} B={len(group_b)} "
        f"C={len(group_c)} D={len(group_d)}; {expansion_outside} new-only green families outside the window"
    )
    if disagreements:
        logger.warning(f"{disagreements} families change window membership between snapshots")
    if partition.old_only:
        logger.warning(f"{partition.old_only} families of the old snapshot are absent from the new one")
    return partition


def check_partition(partition, new_families):
    """Groups are pairwise disjoint and B+C+D covers the new snapshot's green families in the window."""
    groups = [partition.group(name) for name in GROUPS]
    for i in range(len(groups)):
        for j in range(i + 1, len(groups)):
            overlap = groups[i] & groups[j]
            if overlap:
                raise InvariantViolation(
                    f"Groups {GROUPS[i]} and {GROUPS[j]} share {len(overlap)} families"
                )
    green_new = set(in_window(green_families(new_families), partition.window))
    covered = partition.group_b | partition.group_c | partition.group_d
    if covered != green_new:
        raise InvariantViolation(
            f"B+C+D covers {len(covered)} families but the new snapshot has {len(green_new)} green families in the window"
        )


def reverse_sizes(old_families, new_families, window):
    """Sizes with snapshot roles swapped: green->non-green among common families, green in old but absent from new."""
    swapped = decompose(new_families, old_families, window)
    return {
        "green_to_nongreen": swapped.n_reclassified,
        "green_old_absent_new": swapped.n_expansion,
    }


def _ratio(numerator, denominator):
    if denominator <= 0:
        raise ZeroDenominator(f"Share undefined: denominator is {denominator}")
    return numerator / denominator


def reclassification_share(partition, new_green_total):
    """|C| / (green_new - |D|)."""
    return _ratio(partition.n_reclassified, new_green_total - partition.n_expansion)


def set_expansion_share(partition, new_green_total, exclude_reclassified=True):
    """|D| / (green_new - |C|); with exclude_reclassified=False, |D| / green_new."""
    denominator = new_green_total - partition.n_reclassified if exclude_reclassified else new_green_total
    return _ratio(partition.n_expansion, denominator)


def filtering_reduction(count_new_unfiltered, count_new_filtered):
    if count_new_filtered > count_new_unfiltered or count_new_filtered < 0:
        raise ValueError("Filtered count must lie between 0 and the unfiltered count")
    return 1 - _ratio(count_new_filtered, count_new_unfiltered)


def combination_table(old_families, new_families, partition, filters=ALL_FILTERS):
    """Combination table: per filter, green families in each snapshot and their overlap with groups C and D."""
    old_green = in_window(green_families(old_families), partition.window)
    new_green = in_window(green_families(new_families), partition.window)
    rows = []
    for f in filters:
        kept_old = apply_filter(old_green, f)
        kept_new = apply_filter(new_green, f)
        rows.append(CombinationRow(
            filter=f,
            count_old=len(kept_old),
            count_new=len(kept_new),
            count_reclass=len(partition.group_c & kept_new.keys()),
            count_expansion=len(partition.group_d & kept_new.keys()),
        ))
        logger.debug(f"{f.label}: {rows[-1]}")
    return rows


def combination_frame(rows):
    return pd.DataFrame([row.as_dict() for row in rows], columns=TABLE2_COLUMNS)


def load_table2_fixture(path=None):
    """The published combination counts as CombinationRow objects."""
    if path is None:
        context = resources.as_file(resources.files("drift").joinpath("data/table2.csv"))
    else:
        context = nullcontext(path)
    with context as csv_path:
        df = pd.read_csv(csv_path)
    if list(df.columns) != TABLE2_COLUMNS:
        raise ValueError(f"Combination fixture must have columns {TABLE2_COLUMNS}")
    return [
        CombinationRow(
            filter=QualityFilter.parse(row.filter),
            count_old=int(row.count_2019),
            count_new=int(row.count_2023),
            count_reclass=int(row.reclassification),
            count_expansion=int(row.set_expansion),
        )
        for row in df.itertuples(index=False)
    ]


def _maybe(func, *args, **kwargs):
    try:
        return func(*args, **kwargs)
    except ZeroDenominator:
        return None


def replay_table2(rows):
    """Every derived share of the combination table, per filter row."""
    unfiltered = next((r for r in rows if r.filter is QualityFilter.NONE), None)
    replay = []
    for row in rows:
        replay.append({
            "filter": row.filter.label,
            "reclassification_share": _maybe(reclassification_share, row, row.count_new),
            "reclassification_share_of_new": _maybe(_ratio, row.count_reclass, row.count_new),
            "set_expansion_share": _maybe(set_expansion_share, row, row.count_new),
            "set_expansion_share_of_new": _maybe(set_expansion_share, row, row.count_new,
                                                 exclude_reclassified=False),
            "filtering_reduction": (
                _maybe(filtering_reduction, unfiltered.count_new, row.count_new) if unfiltered else None
            ),
        })
    return replay


def partition_shares(partition, new_families):
    """Headline shares for an observed partition."""
    new_green_total = len(in_window(green_families(new_families), partition.window))
    shares = {
        "new_green_total": new_green_total,
        "group_sizes": partition.sizes(),
        "reclassification_share": _maybe(reclassification_share, partition, new_green_total),
        "set_expansion_share": _maybe(set_expansion_share, partition, new_green_total),
        "set_expansion_share_of_new": _maybe(set_expansion_share, partition, new_green_total,
                                             exclude_reclassified=False),
    }
    for key in ("reclassification_share", "set_expansion_share"):
        if shares[key] is None:
            logger.warning(f"{key} is undefined for this partition (empty denominator)")
    return shares


GROUP_COLUMNS = ["family_id", "earliest_year", "offices", "fwd_cit_5y"]


def group_frame(partition, name, new_families):
    """One row per family of the group, attributes from the snapshot the group was decided in."""
    members = partition.group(name)
    rows = []
    for fid in sorted(members):
        family = new_families[fid]
        rows.append({
            "family_id": fid,
            "earliest_year": family.earliest_year,
            "offices": ";".join(sorted(family.offices)),
            "fwd_cit_5y": "" if family.fwd_cit_5y is None else family.fwd_cit_5y,
        })
    return pd.DataFrame(rows, columns=GROUP_COLUMNS)


def read_group_frame(path):
    """Families of a written group CSV, rebuilt with the fields the quality filters need."""
    df = pd.read_csv(path, dtype=str, keep_default_na=False)
    if list(df.columns) != GROUP_COLUMNS:
        raise SchemaError(f"{path}: expected header {GROUP_COLUMNS}, got {list(df.columns)}")
    families = {}
    for row in df.itertuples(index=False):
        fid = int(row.family_id)
        families[fid] = FamilyRecord(
            family_id=fid,
            member_appln_ids=frozenset(),
            offices=frozenset(o for o in row.offices.split(";") if o),
            earliest_year=int(row.earliest_year),
            is_green=True,
            fwd_cit_5y=int(row.fwd_cit_5y) if row.fwd_cit_5y != "" else None,
        )
    return families

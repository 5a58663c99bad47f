# drift/statistics.py
"""
Trend series, rankings by Y02 group / office, class-level reclassification
and the log-log fit of reclassifications against class size.

Multi-classified families count fully in every group or class they touch,
and a family counts at every office where one of its members was filed.
"""
import logging
import math
from collections import Counter
from dataclasses import dataclass

import numpy as np
import pandas as pd
from sklearn.linear_model import LinearRegression

from drift.conf import setting
from drift.cpc_codes import green_groups, truncate
from drift.exceptions import InsufficientPoints
from drift.family_builder import ALL_FILTERS, QualityFilter, apply_filter, green_families, in_window, offices_of

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrendSeries:
    label: str
    points: dict  # year -> count, every year of the window present

    @classmethod
    def from_counts(cls, label, counts, window):
        start, end = window
        return cls(label=label, points={year: int(counts.get(year, 0)) for year in range(start, end + 1)})

    @property
    def total(self):
        return sum(self.points.values())

    def frame(self):
        return pd.DataFrame({"year": list(self.points), "count": list(self.points.values())})


@dataclass(frozen=True)
class RankEntry:
    key: str
    absolute: int
    share: float | None


@dataclass(frozen=True)
class Ranking:
    by_absolute: list
    by_share: list

    @staticmethod
    def frame(entries):
        return pd.DataFrame(
            [{"key": e.key, "absolute": e.absolute, "share": e.share} for e in entries],
            columns=["key", "absolute", "share"],
        )


@dataclass(frozen=True)
class ClassReclassPoint:
    class_code: str
    size_new: int
    added: int
    removed: int

    @property
    def turbulence(self):
        return self.added + self.removed


@dataclass(frozen=True)
class ClassDrift:
    points: list
    aggregate_rate: float | None
    aggregation: str


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    r_squared: float
    n_points: int

    def as_dict(self):
        return {"slope": self.slope, "intercept": self.intercept, "r2": self.r_squared, "n": self.n_points}


# --- trends -----------------------------------------------------------------

def trend(families, window, label=""):
    """Families per earliest year; years of the window without families are 0."""
    start, end = window
    counts = Counter(
        f.earliest_year for f in _records(families) if start <= f.earliest_year <= end
    )
    return TrendSeries.from_counts(label, counts, window)


def share_series(numerator, denominator):
    """Per-year ratio; years with an empty denominator are left out."""
    return {
        year: numerator.points.get(year, 0) / total
        for year, total in denominator.points.items()
        if total
    }


def trend_pair(old_families, new_families, window, quality_filter=QualityFilter.NONE):
    """Green families per year in each snapshot, after an optional quality filter."""
    old = apply_filter(green_families(old_families), quality_filter)
    new = apply_filter(green_families(new_families), quality_filter)
    return trend(old, window, label="old"), trend(new, window, label="new")


def pair_frame(old_series, new_series):
    years = list(old_series.points)
    return pd.DataFrame({
        "year": years,
        "old": [old_series.points[y] for y in years],
        "new": [new_series.points.get(y, 0) for y in years],
    })


def _records(families):
    return families.values() if hasattr(families, "values") else families


# --- rankings ---------------------------------------------------------------

def _ranking(counts, totals, top_k, restrict_shares_to_top):
    entries = {
        key: RankEntry(key=key, absolute=count, share=(count / totals[key]) if totals.get(key) else None)
        for key, count in counts.items()
    }
    by_absolute = sorted(entries.values(), key=lambda e: (-e.absolute, e.key))
    candidates = by_absolute[:top_k] if restrict_shares_to_top else list(entries.values())
    by_share = sorted(
        (e for e in candidates if e.share is not None),
        key=lambda e: (-e.share, e.key),
    )
    return Ranking(by_absolute=by_absolute[:top_k], by_share=by_share[:top_k])


def rank_by_group(reclassified_families, all_green_families, top_k=10):
    """Y02 groups ranked by reclassified families, with share of the group's green families."""
    counts = Counter()
    for family in _records(reclassified_families):
        counts.update(green_groups(family.symbols))
    totals = Counter()
    for family in _records(all_green_families):
        totals.update(green_groups(family.symbols))
    return _ranking(counts, totals, top_k, restrict_shares_to_top=False)


def rank_by_office(family_set, reference_set, top_k=10):
    """Offices ranked by families in ``family_set``; shares only for the top_k offices."""
    counts = offices_of(_as_mapping(family_set))
    totals = offices_of(_as_mapping(reference_set))
    return _ranking(counts, totals, top_k, restrict_shares_to_top=True)


def office_by_filter(families, window, filters=ALL_FILTERS):
    """Green families per office under each quality filter, restricted to the window."""
    base = in_window(green_families(families), window)
    return {f: offices_of(apply_filter(base, f)) for f in filters}


def office_filter_frame(table):
    offices = sorted({office for counts in table.values() for office in counts})
    rows = [
        {"office": office, **{f.label: counts.get(office, 0) for f, counts in table.items()}}
        for office in offices
    ]
    return pd.DataFrame(rows, columns=["office", *(f.label for f in table)])


def _as_mapping(families):
    if hasattr(families, "values"):
        return families
    return {f.family_id: f for f in families}


# --- class-level reclassification -------------------------------------------

def _classes(family, level):
    return {truncate(s, level) for s in family.symbols}


def general_reclassification(old_families, new_families, level="class", window=None, aggregation=None):
    """
    Per class at ``level``: families (present in both snapshots) added to or removed
    from the class between snapshots, and the class size in the new snapshot.
    """
    if level not in ("class", "subclass"):
        raise ValueError(f"level must be 'class' or 'subclass', got {level!r}")
    aggregation = aggregation or setting("RECLASS_AGGREGATION", "pooled")
    if aggregation not in ("pooled", "mean"):
        raise ValueError(f"aggregation must be 'pooled' or 'mean', got {aggregation!r}")

    def eligible(family):
        return window is None or window[0] <= family.earliest_year <= window[1]

    size_new, added, removed = Counter(), Counter(), Counter()
    for fid, new in new_families.items():
        if not eligible(new):
            continue
        new_classes = _classes(new, level)
        size_new.update(new_classes)
        old = old_families.get(fid)
        if old is None:
            continue
        old_classes = _classes(old, level)
        added.update(new_classes - old_classes)
        removed.update(old_classes - new_classes)

    codes = sorted(set(size_new) | set(added) | set(removed))
    points = [
        ClassReclassPoint(class_code=c, size_new=size_new[c], added=added[c], removed=removed[c])
        for c in codes
    ]
    rate = aggregate_rate(points, aggregation)
    logger.info(f"{len(points)} {level}es compared; aggregate reclassification rate {rate}")
    return ClassDrift(points=points, aggregate_rate=rate, aggregation=aggregation)


def aggregate_rate(points, aggregation="pooled"):
    if aggregation == "mean":
        rates = [p.turbulence / p.size_new for p in points if p.size_new]
        return sum(rates) / len(rates) if rates else None
    total_size = sum(p.size_new for p in points)
    if not total_size:
        return None
    return sum(p.turbulence for p in points) / total_size


def points_frame(points):
    return pd.DataFrame(
        [{"class": p.class_code, "size": p.size_new, "added": p.added, "removed": p.removed} for p in points],
        columns=["class", "size", "added", "removed"],
    )


# --- log-log fits -----------------------------------------------------------

def loglog_fit(pairs, min_size=None):
    """OLS of log10(count) on log10(size) over pairs with size >= min_size and count >= 1 (empty classes never count)."""
    min_size = setting("MIN_CLASS_SIZE", 1000) if min_size is None else min_size
    usable = [(s, c) for s, c in pairs if s >= max(min_size, 1) and c >= 1]
    if len(usable) < 2:
        raise InsufficientPoints(f"Need at least 2 classes with size >= {min_size} and a non-zero count, got {len(usable)}")

    x = np.log10(np.array([s for s, _ in usable], dtype=float)).reshape(-1, 1)
    y = np.log10(np.array([c for _, c in usable], dtype=float))
    if np.ptp(x) == 0:
        raise InsufficientPoints("All usable classes have the same size; slope is undefined")

    model = LinearRegression().fit(x, y)
    r_squared = float(model.score(x, y))
    return FitResult(
        slope=float(model.coef_[0]),
        intercept=float(model.intercept_),
        r_squared=min(1.0, max(0.0, r_squared)),
        n_points=len(usable),
    )


def class_size_fits(points, min_size=None):
    """Fits for added and removed counts; None where there are too few usable classes."""
    min_size = setting("MIN_CLASS_SIZE", 1000) if min_size is None else min_size
    fits, excluded = {}, {}
    for name in ("added", "removed"):
        pairs = [(p.size_new, getattr(p, name)) for p in points]
        excluded[name] = {
            "too_small": sum(1 for s, _ in pairs if s < max(min_size, 1)),
            "zero_count": sum(1 for s, c in pairs if s >= max(min_size, 1) and c < 1),
        }
        try:
            fits[name] = loglog_fit(pairs, min_size)
        except InsufficientPoints as exc:
            logger.warning(f"No {name} fit: {exc}")
            fits[name] = None
    return fits, excluded


def top_turbulent_classes(points, top_k=10, mode="absolute", min_size=None):
    """Classes ranked by added+removed (absolute) or by (added+removed)/size_new (relative)."""
    min_size = setting("MIN_CLASS_SIZE", 1000) if min_size is None else min_size
    if mode == "absolute":
        return sorted(points, key=lambda p: (-p.turbulence, p.class_code))[:top_k]
    if mode == "relative":
        eligible = [p for p in points if p.size_new >= max(min_size, 1)]
        return sorted(eligible, key=lambda p: (-p.turbulence / p.size_new, p.class_code))[:top_k]
    raise ValueError(f"mode must be 'absolute' or 'relative', got {mode!r}")


def turbulence_frame(points):
    return pd.DataFrame(
        [
            {
                "class": p.class_code, "size": p.size_new, "added": p.added, "removed": p.removed,
                "absolute": p.turbulence,
                "relative": (p.turbulence / p.size_new) if p.size_new else math.nan,
            }
            for p in points
        ],
        columns=["class", "size", "added", "removed", "absolute", "relative"],
    )

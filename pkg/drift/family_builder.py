# drift/family_builder.py
"""DOCDB family aggregation and the quality filters applied to families."""
import logging
from collections import Counter
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from drift.cpc_codes import is_green
from drift.exceptions import MissingIndicator
from drift.snapshot_ingest import CsrIndex, sorted_unique_pairs
from drift.utils.threads import run_parallel, split_evenly

logger = logging.getLogger(__name__)

EPO, USPTO, JPO = "EP", "US", "JP"


@dataclass(frozen=True, slots=True)
class FamilyRecord:
    family_id: int
    member_appln_ids: frozenset
    offices: frozenset
    earliest_year: int
    is_green: bool
    symbols: frozenset = field(default_factory=frozenset)
    fwd_cit_5y: int | None = None  # filled in by citation_graph

    @property
    def family_size(self):
        return len(self.offices)

    @property
    def has_epo(self):
        return EPO in self.offices

    @property
    def has_uspto(self):
        return USPTO in self.offices

    @property
    def has_jpo(self):
        return JPO in self.offices


class QualityFilter(Enum):
    NONE = ("none", "No filtering")
    CITED_GT0 = ("cited", "Citations")
    FAMSIZE_GT1 = ("famsize", "Family size")
    TRIADIC = ("triadic", "Triadic")
    EPO = ("epo", "EPO")
    USPTO = ("uspto", "USPTO")

    def __init__(self, cli_name, label):
        self.cli_name = cli_name
        self.label = label

    @classmethod
    def parse(cls, text):
        key = (text or "").strip().lower()
        for f in cls:
            if key in (f.cli_name, f.label.lower(), f.name.lower()):
                return f
        raise ValueError(f"Unknown quality filter {text!r}")

    def accepts(self, family):
        if self is QualityFilter.NONE:
            return True
        if self is QualityFilter.FAMSIZE_GT1:
            return family.family_size >= 2
        if self is QualityFilter.CITED_GT0:
            if family.fwd_cit_5y is None:
                raise MissingIndicator(
                    f"Family {family.family_id} has no forward-citation count; run citation counting first"
                )
            return family.fwd_cit_5y >= 1
        if self is QualityFilter.EPO:
            return family.has_epo
        if self is QualityFilter.USPTO:
            return family.has_uspto
        return family.has_epo and family.has_uspto and family.has_jpo


# combination table row order
ALL_FILTERS = tuple(QualityFilter)


def build_families(store, threads=1):
    """One FamilyRecord per distinct family_id, keyed and ordered by family_id."""
    apps = store.applications
    order = np.lexsort((apps.appln_ids, apps.family_ids))
    family_ids = apps.family_ids[order]
    appln_ids = apps.appln_ids[order]
    authorities = apps.authorities[order]
    years = apps.years[order]
    unique, starts = np.unique(family_ids, return_index=True)
    bounds = np.append(starts, len(family_ids))

    # pool member classifications per family
    cls_appln, cls_codes = store.classifications.pair_arrays()
    cls_family = apps.family_of(cls_appln) if len(cls_appln) else cls_appln
    fam_keys, fam_codes, _ = sorted_unique_pairs(cls_family, cls_codes)
    pooled = CsrIndex.from_sorted_pairs(fam_keys, fam_codes, table=store.symbol_table)

    def build_chunk(positions):
        records = []
        for i in positions:
            lo, hi = bounds[i], bounds[i + 1]
            family_id = int(unique[i])
            symbols = pooled.get(family_id, frozenset())
            records.append(FamilyRecord(
                family_id=family_id,
                member_appln_ids=frozenset(appln_ids[lo:hi].tolist()),
                offices=frozenset(authorities[lo:hi].tolist()),
                earliest_year=int(years[lo:hi].min()),
                is_green=any(is_green(s) for s in symbols),
                symbols=symbols,
            ))
        return records

    chunks = split_evenly(range(len(unique)), threads)
    families = {}
    for records in run_parallel(build_chunk, chunks, threads=threads):
        for record in records:
            families[record.family_id] = record

    green = sum(1 for f in families.values() if f.is_green)
    logger.info(f"[{store.label}] built {len(families)} families ({green} green)")
    return families


def apply_filter(families, quality_filter):
    return {fid: f for fid, f in families.items() if quality_filter.accepts(f)}


def in_window(families, window):
    start, end = window
    return {fid: f for fid, f in families.items() if start <= f.earliest_year <= end}


def green_families(families):
    return {fid: f for fid, f in families.items() if f.is_green}


def with_citations(families, counts):
    return {fid: replace(f, fwd_cit_5y=int(counts.get(fid, 0))) for fid, f in families.items()}


def offices_of(families):
    """office -> number of families with at least one member filed there."""
    counts = Counter()
    for family in families.values():
        counts.update(family.offices)
    return dict(sorted(counts.items()))

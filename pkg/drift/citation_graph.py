# drift/citation_graph.py
"""
Family-level forward citations.

A citing family counts once per cited family, intra-family citations are
ignored, and only citing families whose earliest year lies 0..N years after
the cited family's earliest year are kept (N = 5 by default).
"""
import logging

import numpy as np

from drift.conf import setting
from drift.snapshot_ingest import CsrIndex, sorted_unique_pairs

logger = logging.getLogger(__name__)


def family_earliest_years(store):
    """(family_ids, earliest_years) arrays, sorted by family_id."""
    apps = store.applications
    if len(apps) == 0:
        empty = np.empty(0, dtype=np.int64)
        return empty, empty
    order = np.argsort(apps.family_ids, kind="stable")
    family_ids = apps.family_ids[order]
    years = apps.years[order]
    unique, starts = np.unique(family_ids, return_index=True)
    return unique, np.minimum.reduceat(years, starts)


def family_citation_index(store, families, window_years=None):
    """FamilyCitationIndex: cited family_id -> frozenset of citing family_ids within the lag window."""
    window_years = setting("CITATION_WINDOW_YEARS", 5) if window_years is None else window_years
    cited_appln, citing_appln = store.citations.pair_arrays()
    if len(cited_appln) == 0:
        return CsrIndex.empty()

    apps = store.applications
    cited_family = apps.family_of(cited_appln)
    citing_family = apps.family_of(citing_appln)

    fam_ids, fam_years = family_earliest_years(store)
    lag = fam_years[np.searchsorted(fam_ids, citing_family)] - fam_years[np.searchsorted(fam_ids, cited_family)]

    wanted = np.fromiter(families.keys(), dtype=np.int64, count=len(families))
    keep = (
        (cited_family != citing_family)
        & (lag >= 0)
        & (lag <= window_years)
        & np.isin(cited_family, wanted)
    )
    cited, citing, _ = sorted_unique_pairs(cited_family[keep], citing_family[keep])
    return CsrIndex.from_sorted_pairs(cited, citing)


def forward_citations_5y(store, families, window_years=None):
    """family_id -> number of distinct citing families within the lag window."""
    index = family_citation_index(store, families, window_years)
    counts = dict.fromkeys(families.keys(), 0)
    if index.n_pairs:
        for family_id, n in zip(index.keys_array.tolist(), np.diff(index.offsets).tolist()):
            counts[family_id] = n
    cited = sum(1 for n in counts.values() if n)
    logger.info(f"[{store.label}] {cited} of {len(counts)} families cited within the window")
    return counts

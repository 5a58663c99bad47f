"""Shared builders for the drift test-suite."""
from collections import Counter, defaultdict
from pathlib import Path

from drift.cpc_codes import normalize
from drift.family_builder import FamilyRecord
from drift.snapshot_ingest import ingest_snapshot

FIXTURES = Path(__file__).resolve().parent / "fixtures"

APPLICATIONS_HEADER = "appln_id\tfamily_id\tauthority\tfiling_date"
CLASSIFICATIONS_HEADER = "appln_id\tcpc_symbol"
CITATIONS_HEADER = "citing_appln_id\tcited_appln_id"


def write_tsv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [header] + ["\t".join(str(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def write_snapshot(directory, applications=(), classifications=(), citations=()):
    """Three snapshot TSVs; returns their paths in ingest order."""
    directory = Path(directory)
    return (
        write_tsv(directory / "applications.tsv", APPLICATIONS_HEADER, applications),
        write_tsv(directory / "classifications.tsv", CLASSIFICATIONS_HEADER, classifications),
        write_tsv(directory / "citations.tsv", CITATIONS_HEADER, citations),
    )


def snapshot(directory, label="test", applications=(), classifications=(), citations=(), **kwargs):
    paths = write_snapshot(directory, applications, classifications, citations)
    return ingest_snapshot(*paths, label=label, **kwargs)


def family(family_id, year=2010, offices=("US",), green=True, fwd=None, symbols=frozenset()):
    return FamilyRecord(
        family_id=family_id,
        member_appln_ids=frozenset({family_id * 10}),
        offices=frozenset(offices),
        earliest_year=year,
        is_green=green,
        symbols=frozenset(symbols),
        fwd_cit_5y=fwd,
    )


def families_of(*records):
    return {r.family_id: r for r in records}


class RawSnapshot:
    """
    Brute-force family view of one snapshot built straight from its tables
    with plain loops; used as an oracle against the pipeline.
    """

    def __init__(self, tables, window_years=5):
        self.family_of = {}
        self.years = defaultdict(list)
        self.offices = defaultdict(set)
        for row in tables["applications"].itertuples(index=False):
            self.family_of[row.appln_id] = row.family_id
            self.years[row.family_id].append(int(row.filing_date[:4]))
            self.offices[row.family_id].add(row.authority)
        self.earliest = {fid: min(years) for fid, years in self.years.items()}

        self.codes = defaultdict(set)
        for row in tables["classifications"].itertuples(index=False):
            self.codes[self.family_of[row.appln_id]].add(normalize(row.cpc_symbol))
        self.green = {fid: any(c.startswith("Y02") for c in self.codes[fid]) for fid in self.earliest}

        citing_sets = defaultdict(set)
        for row in tables["citations"].itertuples(index=False):
            cited = self.family_of[row.cited_appln_id]
            citing = self.family_of[row.citing_appln_id]
            if cited == citing:
                continue
            lag = self.earliest[citing] - self.earliest[cited]
            if 0 <= lag <= window_years:
                citing_sets[cited].add(citing)
        self.fwd = {fid: len(citing_sets.get(fid, ())) for fid in self.earliest}

    def green_groups(self, fid):
        return {c.split("/")[0] for c in self.codes[fid] if c.startswith("Y02")}

    def classes(self, fid):
        return {c[:3] for c in self.codes[fid]}

    def passes(self, fid, name):
        offices = self.offices[fid]
        return {
            "none": True,
            "cited": self.fwd[fid] >= 1,
            "famsize": len(offices) >= 2,
            "triadic": {"EP", "US", "JP"} <= offices,
            "epo": "EP" in offices,
            "uspto": "US" in offices,
        }[name]

    def green_in(self, window):
        return {fid for fid, green in self.green.items() if green and window[0] <= self.earliest[fid] <= window[1]}

    def trend(self, fids, window):
        counts = Counter(self.earliest[fid] for fid in fids)
        return {year: counts.get(year, 0) for year in range(window[0], window[1] + 1)}

# drift/snapshot_ingest.py
"""
Streaming ingestion of one database snapshot.

Three TSV dumps (applications, classifications, citations) are read in
chunks, validated row by row, and folded into an immutable
``SnapshotStore``. Bad rows are skipped and counted; a bad header aborts.
The two large tables are kept as sorted numpy arrays (CSR layout), so
memory grows with distinct entities rather than with file size.
"""
import csv
import logging
from collections.abc import Mapping
from dataclasses import asdict, dataclass, field
from datetime import date

import numpy as np
import pandas as pd

from drift.conf import setting
from drift.cpc_codes import parse_symbol, render_symbol
from drift.exceptions import ConfigError, MalformedSymbol, SchemaError
from drift.utils.threads import run_parallel

logger = logging.getLogger(__name__)

APPLICATION_COLUMNS = ["appln_id", "family_id", "authority", "filing_date"]
CLASSIFICATION_COLUMNS = ["appln_id", "cpc_symbol"]
CITATION_COLUMNS = ["citing_appln_id", "cited_appln_id"]

MAX_DANGLING_EXAMPLES = 100
_EPOCH_ORDINAL = date(1970, 1, 1).toordinal()
_ID_PATTERN = r"[1-9][0-9]{0,17}"


@dataclass(frozen=True, slots=True)
class ApplicationRecord:
    appln_id: int
    family_id: int
    authority: str
    filing_date: date

    @property
    def filing_year(self):
        return self.filing_date.year


@dataclass(frozen=True, slots=True)
class ClassificationRecord:
    appln_id: int
    symbol: object


@dataclass(frozen=True, slots=True)
class CitationRecord:
    citing_appln_id: int
    cited_appln_id: int


class ApplicationTable(Mapping):
    """appln_id -> ApplicationRecord, stored column-wise and sorted by appln_id."""

    def __init__(self, appln_ids, family_ids, authorities, ordinals):
        self.appln_ids = _frozen(np.asarray(appln_ids, dtype=np.int64))
        self.family_ids = _frozen(np.asarray(family_ids, dtype=np.int64))
        self.authorities = _frozen(np.asarray(authorities, dtype="U2"))
        self.ordinals = _frozen(np.asarray(ordinals, dtype=np.int64))
        days = (self.ordinals - _EPOCH_ORDINAL).astype("datetime64[D]")
        self.years = _frozen(days.astype("datetime64[Y]").astype(np.int64) + 1970)

    def _position(self, appln_id):
        i = int(np.searchsorted(self.appln_ids, appln_id))
        if i < len(self.appln_ids) and self.appln_ids[i] == appln_id:
            return i
        return None

    def __getitem__(self, appln_id):
        i = self._position(appln_id)
        if i is None:
            raise KeyError(appln_id)
        return self._record(i)

    def _record(self, i):
        return ApplicationRecord(
            appln_id=int(self.appln_ids[i]),
            family_id=int(self.family_ids[i]),
            authority=str(self.authorities[i]),
            filing_date=date.fromordinal(int(self.ordinals[i])),
        )

    def __contains__(self, appln_id):
        return self._position(appln_id) is not None

    def __iter__(self):
        return iter(self.appln_ids.tolist())

    def __len__(self):
        return len(self.appln_ids)

    def records(self):
        for i in range(len(self.appln_ids)):
            yield self._record(i)

    def family_of(self, appln_ids):
        """Vectorized appln_id -> family_id for ids known to be present."""
        positions = np.searchsorted(self.appln_ids, appln_ids)
        return self.family_ids[positions]


class CsrIndex(Mapping):
    """
    key -> frozenset of values over two sorted arrays (compressed sparse rows).

    When ``table`` is given the stored values are indices into it.
    """

    def __init__(self, keys, offsets, values, table=None):
        self.keys_array = _frozen(np.asarray(keys, dtype=np.int64))
        self.offsets = _frozen(np.asarray(offsets, dtype=np.int64))
        self.values_array = _frozen(np.asarray(values, dtype=np.int64))
        self.table = table

    @classmethod
    def from_sorted_pairs(cls, keys, values, table=None):
        keys = np.asarray(keys, dtype=np.int64)
        unique_keys, starts = np.unique(keys, return_index=True)
        offsets = np.append(starts, len(keys))
        return cls(unique_keys, offsets, values, table=table)

    @classmethod
    def empty(cls, table=None):
        return cls(np.empty(0), np.zeros(1), np.empty(0), table=table)

    def _position(self, key):
        i = int(np.searchsorted(self.keys_array, key))
        if i < len(self.keys_array) and self.keys_array[i] == key:
            return i
        return None

    def __getitem__(self, key):
        i = self._position(key)
        if i is None:
            raise KeyError(key)
        chunk = self.values_array[self.offsets[i]:self.offsets[i + 1]].tolist()
        if self.table is not None:
            return frozenset(self.table[v] for v in chunk)
        return frozenset(chunk)

    def __contains__(self, key):
        return self._position(key) is not None

    def __iter__(self):
        return iter(self.keys_array.tolist())

    def __len__(self):
        return len(self.keys_array)

    @property
    def n_pairs(self):
        return len(self.values_array)

    def pair_arrays(self):
        """(keys, values) expanded to one entry per pair."""
        counts = np.diff(self.offsets)
        return np.repeat(self.keys_array, counts), self.values_array


@dataclass(frozen=True)
class SnapshotStore:
    label: str
    applications: ApplicationTable
    classifications: CsrIndex     # appln_id -> frozenset[CpcSymbol]
    citations: CsrIndex           # cited appln_id -> frozenset[citing appln_id]

    @property
    def symbol_table(self):
        return self.classifications.table

    def describe(self):
        return {
            "label": self.label,
            "applications": len(self.applications),
            "classified_applications": len(self.classifications),
            "classifications": self.classifications.n_pairs,
            "cited_applications": len(self.citations),
            "citations": self.citations.n_pairs,
            "distinct_symbols": len(self.symbol_table or ()),
        }


@dataclass
class TableReport:
    path: str = ""
    rows: int = 0
    loaded: int = 0
    duplicates: int = 0
    malformed: int = 0
    dangling: int = 0
    self_citations: int = 0
    dangling_examples: list = field(default_factory=list)


@dataclass
class IngestReport:
    label: str
    applications: TableReport = field(default_factory=TableReport)
    classifications: TableReport = field(default_factory=TableReport)
    citations: TableReport = field(default_factory=TableReport)

    @property
    def duplicates(self):
        return self.applications.duplicates + self.classifications.duplicates + self.citations.duplicates

    @property
    def malformed(self):
        return self.applications.malformed + self.classifications.malformed + self.citations.malformed

    @property
    def dangling(self):
        return self.classifications.dangling + self.citations.dangling

    def to_dict(self):
        payload = asdict(self)
        payload["totals"] = {
            "duplicates": self.duplicates,
            "malformed": self.malformed,
            "dangling": self.dangling,
        }
        return payload


# --- reading ----------------------------------------------------------------

def _frozen(array):
    array.setflags(write=False)
    return array


def _count_data_lines(path):
    """Non-empty lines after the header."""
    with open(path, "rb") as handle:
        next(handle, None)
        return sum(1 for line in handle if line.rstrip(b"\r\n"))


def _read_chunks(path, columns, report, chunk_rows):
    try:
        header = pd.read_csv(path, sep="\t", nrows=0, quoting=csv.QUOTE_NONE, encoding="utf-8")
    except pd.errors.EmptyDataError:
        raise SchemaError(f"{path}: empty file, expected header {columns}")
    except UnicodeDecodeError as exc:
        raise SchemaError(f"{path}: not valid UTF-8 ({exc.reason} at byte {exc.start})")
    if list(header.columns) != columns:
        raise SchemaError(f"{path}: expected header {columns}, got {list(header.columns)}")

    # rows with too many fields are skipped by the parser and counted from the line total
    parsed = 0
    try:
        reader = pd.read_csv(
            path, sep="\t", dtype=str, keep_default_na=False, quoting=csv.QUOTE_NONE,
            encoding="utf-8", on_bad_lines="skip", chunksize=chunk_rows,
        )
        with reader:
            for chunk in reader:
                parsed += len(chunk)
                report.rows += len(chunk)
                yield chunk
    except UnicodeDecodeError as exc:
        raise SchemaError(f"{path}: not valid UTF-8 ({exc.reason} at byte {exc.start})")

    skipped = max(0, _count_data_lines(path) - parsed)
    report.rows += skipped
    report.malformed += skipped


def _id_mask(series):
    return series.str.fullmatch(_ID_PATTERN).fillna(False).astype(bool)


def _stage_applications(path, report, chunk_rows):
    staged = {}
    for chunk in _read_chunks(path, APPLICATION_COLUMNS, report, chunk_rows):
        dates = pd.to_datetime(chunk["filing_date"], format="%Y-%m-%d", errors="coerce")
        ok = (
            _id_mask(chunk["appln_id"])
            & _id_mask(chunk["family_id"])
            & chunk["authority"].str.fullmatch(r"[A-Z]{2}").fillna(False).astype(bool)
            & dates.notna()
        )
        report.malformed += int((~ok).sum())
        good = chunk[ok]
        ordinals = (dates[ok] - pd.Timestamp("1970-01-01")).dt.days + _EPOCH_ORDINAL
        rows = zip(
            good["appln_id"].astype(np.int64).tolist(),
            good["family_id"].astype(np.int64).tolist(),
            good["authority"].tolist(),
            ordinals.astype(np.int64).tolist(),
        )
        for appln_id, family_id, authority, ordinal in rows:
            candidate = (family_id, authority, ordinal)
            current = staged.get(appln_id)
            if current is None:
                staged[appln_id] = candidate
                continue
            report.duplicates += 1
            # keep the smallest variant so the result is independent of row order
            if candidate < current:
                staged[appln_id] = candidate

    ids = np.array(sorted(staged), dtype=np.int64)
    values = [staged[i] for i in ids.tolist()]
    table = ApplicationTable(
        ids,
        [v[0] for v in values],
        [v[1] for v in values],
        [v[2] for v in values],
    )
    report.loaded = len(table)
    return table


def _stage_classifications(path, report, chunk_rows):
    interned = {}
    id_chunks, code_chunks = [], []
    for chunk in _read_chunks(path, CLASSIFICATION_COLUMNS, report, chunk_rows):
        lookup = {}
        for raw in chunk["cpc_symbol"].unique().tolist():
            try:
                symbol = parse_symbol(raw)
            except MalformedSymbol:
                lookup[raw] = -1
                continue
            lookup[raw] = interned.setdefault(symbol, len(interned))
        codes = chunk["cpc_symbol"].map(lookup)
        ok = _id_mask(chunk["appln_id"]) & (codes >= 0)
        report.malformed += int((~ok).sum())
        id_chunks.append(chunk.loc[ok, "appln_id"].astype(np.int64).to_numpy())
        code_chunks.append(codes[ok].astype(np.int64).to_numpy())

    # re-number symbols in sorted order so indices do not depend on row order
    table = tuple(sorted(interned))
    remap = np.empty(len(interned), dtype=np.int64)
    for new_index, symbol in enumerate(table):
        remap[interned[symbol]] = new_index
    ids = np.concatenate(id_chunks) if id_chunks else np.empty(0, dtype=np.int64)
    codes = np.concatenate(code_chunks) if code_chunks else np.empty(0, dtype=np.int64)
    codes = remap[codes] if len(codes) else codes
    return ids, codes, table


def _stage_citations(path, report, chunk_rows):
    citing_chunks, cited_chunks = [], []
    for chunk in _read_chunks(path, CITATION_COLUMNS, report, chunk_rows):
        ok = _id_mask(chunk["citing_appln_id"]) & _id_mask(chunk["cited_appln_id"])
        report.malformed += int((~ok).sum())
        citing = chunk.loc[ok, "citing_appln_id"].astype(np.int64).to_numpy()
        cited = chunk.loc[ok, "cited_appln_id"].astype(np.int64).to_numpy()
        own = citing == cited
        report.self_citations += int(own.sum())
        citing_chunks.append(citing[~own])
        cited_chunks.append(cited[~own])
    citing = np.concatenate(citing_chunks) if citing_chunks else np.empty(0, dtype=np.int64)
    cited = np.concatenate(cited_chunks) if cited_chunks else np.empty(0, dtype=np.int64)
    return citing, cited


def sorted_unique_pairs(primary, secondary):
    """Sort pairs by (primary, secondary) and drop repeats; returns (primary, secondary, repeats)."""
    order = np.lexsort((secondary, primary))
    primary, secondary = primary[order], secondary[order]
    if len(primary) == 0:
        return primary, secondary, 0
    repeat = (primary[1:] == primary[:-1]) & (secondary[1:] == secondary[:-1])
    keep = np.concatenate(([True], ~repeat))
    return primary[keep], secondary[keep], int(repeat.sum())


def _dedupe_sorted(primary, secondary, report):
    primary, secondary, repeats = sorted_unique_pairs(primary, secondary)
    report.duplicates += repeats
    return primary, secondary


def _note_dangling(report, mask, describe):
    report.dangling += int(mask.sum())
    room = MAX_DANGLING_EXAMPLES - len(report.dangling_examples)
    if room > 0:
        for i in np.flatnonzero(mask)[:room].tolist():
            report.dangling_examples.append(describe(i))


def ingest_snapshot(applications_path, classifications_path, citations_path, label,
                    chunk_rows=None, threads=1):
    """Build a SnapshotStore from the three dumps; returns (store, IngestReport)."""
    chunk_rows = chunk_rows or setting("INGEST_CHUNK_ROWS", 200_000)
    report = IngestReport(label=label)
    report.applications.path = str(applications_path)
    report.classifications.path = str(classifications_path)
    report.citations.path = str(citations_path)

    stages = [
        (_stage_applications, applications_path, report.applications),
        (_stage_classifications, classifications_path, report.classifications),
        (_stage_citations, citations_path, report.citations),
    ]
    logger.info(f"Ingesting snapshot {label!r} on {min(threads, 3)} thread(s)")
    applications, (cls_ids, cls_codes, symbol_table), (citing, cited) = run_parallel(
        lambda stage: stage[0](stage[1], stage[2], chunk_rows), stages, threads=threads,
    )

    known = applications.appln_ids

    cls_ids, cls_codes = _dedupe_sorted(cls_ids, cls_codes, report.classifications)
    missing = ~np.isin(cls_ids, known)
    _note_dangling(
        report.classifications, missing,
        lambda i: {"appln_id": int(cls_ids[i]), "cpc_symbol": render_symbol(symbol_table[cls_codes[i]])},
    )
    cls_ids, cls_codes = cls_ids[~missing], cls_codes[~missing]
    classifications = CsrIndex.from_sorted_pairs(cls_ids, cls_codes, table=symbol_table)
    report.classifications.loaded = classifications.n_pairs

    cited, citing = _dedupe_sorted(cited, citing, report.citations)
    missing = ~(np.isin(cited, known) & np.isin(citing, known))
    _note_dangling(
        report.citations, missing,
        lambda i: {"citing_appln_id": int(citing[i]), "cited_appln_id": int(cited[i])},
    )
    cited, citing = cited[~missing], citing[~missing]
    citations = CsrIndex.from_sorted_pairs(cited, citing)
    report.citations.loaded = citations.n_pairs

    store = SnapshotStore(label=label, applications=applications,
                          classifications=classifications, citations=citations)

    for name in ("applications", "classifications", "citations"):
        table = getattr(report, name)
        logger.info(
            f"[{label}] {name}: {table.rows} rows, {table.loaded} loaded, "
            f"{table.duplicates} duplicates, {table.malformed} malformed, {table.dangling} dangling"
        )
        if table.malformed or table.dangling:
            logger.warning(
                f"[{label}] {name}: skipped {table.malformed} malformed and {table.dangling} dangling rows"
            )
    return store, report


def validate_window(store, from_year, to_year):
    """Number of applications filed within [from_year, to_year]."""
    if from_year > to_year:
        raise ConfigError(f"Window start {from_year} is after window end {to_year}")
    years = store.applications.years
    return int(((years >= from_year) & (years <= to_year)).sum())

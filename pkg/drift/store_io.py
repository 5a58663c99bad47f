# drift/store_io.py
"""
Versioned binary snapshot store.

Layout: 8 magic bytes, a big-endian uint16 format version, then a joblib
payload made only of plain tuples and numpy arrays in canonical order, so
the same store always serializes to the same bytes.
"""
import logging
import os
import struct
import tempfile
from pathlib import Path

import joblib

from drift.cpc_codes import parse_symbol, render_symbol
from drift.exceptions import StoreFormatError
from drift.snapshot_ingest import ApplicationTable, CsrIndex, SnapshotStore

logger = logging.getLogger(__name__)

MAGIC = b"PATDRIFT"
FORMAT_VERSION = 1
STORE_FILENAME = "store.bin"
_VERSION = struct.Struct(">H")


def _payload(store):
    apps = store.applications
    cls = store.classifications
    cit = store.citations
    return (
        ("label", store.label),
        ("applications", (apps.appln_ids, apps.family_ids, apps.authorities, apps.ordinals)),
        ("symbols", tuple(render_symbol(s) for s in (cls.table or ()))),
        ("classifications", (cls.keys_array, cls.offsets, cls.values_array)),
        ("citations", (cit.keys_array, cit.offsets, cit.values_array)),
    )


def save_store(store, path):
    """Write atomically: temp file in the target directory, then os.replace."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=".store-", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(MAGIC)
            handle.write(_VERSION.pack(FORMAT_VERSION))
            joblib.dump(_payload(store), handle, compress=0)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    logger.info(f"Saved store {store.label!r} to {path}")
    return path


def load_store(path):
    path = Path(path)
    if path.is_dir():
        path = path / STORE_FILENAME
    if not path.exists():
        raise StoreFormatError(f"No snapshot store at {path}")

    with open(path, "rb") as handle:
        magic = handle.read(len(MAGIC))
        if magic != MAGIC:
            raise StoreFormatError(f"{path} is not a patdrift store (bad magic bytes)")
        raw_version = handle.read(_VERSION.size)
        if len(raw_version) != _VERSION.size:
            raise StoreFormatError(f"{path} is truncated")
        (version,) = _VERSION.unpack(raw_version)
        if version != FORMAT_VERSION:
            raise StoreFormatError(
                f"{path} has store format version {version}; this build reads version {FORMAT_VERSION}. "
                "Re-run `ingest` to rebuild it."
            )
        payload = dict(joblib.load(handle))

    table = tuple(parse_symbol(s) for s in payload["symbols"])
    store = SnapshotStore(
        label=payload["label"],
        applications=ApplicationTable(*payload["applications"]),
        classifications=CsrIndex(*payload["classifications"], table=table),
        citations=CsrIndex(*payload["citations"]),
    )
    logger.info(f"Loaded store {store.label!r} from {path}: {len(store.applications)} applications")
    return store

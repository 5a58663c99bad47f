import logging
import os

from joblib import Parallel, delayed

from drift.conf import setting
from drift.exceptions import ConfigError

logger = logging.getLogger(__name__)


def resolve_threads(requested=None):
    """--threads N, else PATDRIFT_THREADS, else every available CPU."""
    value = requested
    if value in (None, "", 0):
        value = setting("PATDRIFT_THREADS", "") or os.environ.get("PATDRIFT_THREADS", "")
    if value in (None, ""):
        return os.cpu_count() or 1
    try:
        threads = int(value)
    except (TypeError, ValueError):
        raise ConfigError(f"Thread count must be an integer, got {value!r}")
    if threads < 1:
        raise ConfigError(f"Thread count must be at least 1, got {threads}")
    return threads


def run_parallel(func, items, threads=1):
    """Map ``func`` over ``items`` on a bounded thread pool; results keep input order."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    n_jobs = min(threads, len(items))
    logger.debug(f"Running {len(items)} tasks on {n_jobs} threads")
    return Parallel(n_jobs=n_jobs, prefer="threads")(delayed(func)(item) for item in items)


def split_evenly(values, parts):
    """Contiguous chunks of ``values`` (already ordered), at most ``parts`` of them."""
    values = list(values)
    if not values:
        return []
    parts = max(1, min(parts, len(values)))
    size, extra = divmod(len(values), parts)
    chunks, start = [], 0
    for i in range(parts):
        stop = start + size + (1 if i < extra else 0)
        chunks.append(values[start:stop])
        start = stop
    return chunks

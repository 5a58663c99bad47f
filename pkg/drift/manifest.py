# drift/manifest.py
"""Run manifest written next to every command's outputs."""
import hashlib
import json
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from drift.conf import setting
from drift.utils.output import dump_json, write_atomic

MANIFEST_FILENAME = "run_manifest.json"


def file_digest(path):
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for block in iter(lambda: handle.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()


def _input_files(paths):
    files = []
    for path in paths:
        path = Path(path)
        if path.is_dir():
            files.extend(sorted(p for p in path.rglob("*") if p.is_file() and p.name != MANIFEST_FILENAME))
        elif path.exists():
            files.append(path)
    return files


def config_hash(options, inputs, version=None):
    """SHA-256 over options, package version and input file contents; paths themselves do not count."""
    version = version or setting("PATDRIFT_VERSION", "1.0.0")
    canonical = {
        "options": options,
        "version": version,
        "inputs": sorted(file_digest(p) for p in _input_files(inputs)),
    }
    text = json.dumps(canonical, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _now():
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


@dataclass
class RunManifest:
    command: str
    argv: list
    config_hash: str
    snapshot_labels: list = field(default_factory=list)
    window: list | None = None
    started_at: str = field(default_factory=_now)
    finished_at: str | None = None
    outputs: list = field(default_factory=list)
    version: str = field(default_factory=lambda: setting("PATDRIFT_VERSION", "1.0.0"))

    def finish(self, outputs, root):
        root = Path(root).resolve()
        names = []
        for p in outputs:
            p = Path(p).resolve()
            names.append(p.relative_to(root).as_posix() if p.is_relative_to(root) else p.name)
        self.outputs = sorted(names)
        self.finished_at = _now()
        return self

    def write(self, out_dir):
        return write_atomic(dump_json(asdict(self)), Path(out_dir) / MANIFEST_FILENAME)

import json
import os
import tempfile
from pathlib import Path

FLOAT_FORMAT = "%.10g"


def write_csv(df, path, sep=","):
    """Schema-stable CSV: fixed float format, LF line endings, no index."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(path, sep=sep, index=False, lineterminator="\n", float_format=FLOAT_FORMAT)
    return path


def dump_json(payload):
    return json.dumps(payload, indent=2, sort_keys=True, default=str) + "\n"


def write_json(payload, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dump_json(payload), encoding="utf-8")
    return path


def write_atomic(text, path):
    """Temp file in the target directory, then os.replace."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}-", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    return path

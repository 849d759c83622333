"""Line-delimited JSON records with a versioned schema."""

import hashlib
import json
import os
from pathlib import Path

SCHEMA_VERSION = "1.0"
SUPPORTED_MAJOR = 1


class SchemaError(ValueError):
    pass


def _default(o):
    if hasattr(o, "tolist"):
        return o.tolist()
    if hasattr(o, "value"):
        return o.value
    raise TypeError(f"not serialisable: {type(o).__name__}")


def dumps(record):
    return json.dumps(record, sort_keys=True, separators=(",", ":"), default=_default)


def make_record(kind, body, provenance=None):
    rec = {"schema_version": SCHEMA_VERSION, "kind": kind}
    rec.update(body)
    if provenance is not None:
        rec["provenance"] = provenance
    return rec


def record_id(*parts):
    return hashlib.sha256(dumps(list(parts)).encode()).hexdigest()[:16]


def check_schema(record):
    version = str(record.get("schema_version", ""))
    try:
        major = int(version.split(".")[0])
    except ValueError:
        raise SchemaError(f"record has no usable schema_version: {version!r}") from None
    if major != SUPPORTED_MAJOR:
        raise SchemaError(f"unsupported schema major version {major}")
    return record


def read_records(path):
    out = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(check_schema(json.loads(line)))
    return out


class Appender:
    """Single writer for a records file. Appends skip ids already present."""

    def __init__(self, path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.seen = set()
        if self.path.exists():
            for rec in read_records(self.path):
                if "id" in rec:
                    self.seen.add(rec["id"])

    def append(self, record):
        rid = record.get("id")
        if rid is not None and rid in self.seen:
            return False
        with open(self.path, "a") as fh:
            fh.write(dumps(record) + "\n")
            fh.flush()
            os.fsync(fh.fileno())
        if rid is not None:
            self.seen.add(rid)
        return True

"""Deterministic result files: CSV details, JSON summaries, hash manifest.

Identical runs must produce byte-identical artifacts, so everything here
avoids timestamps, locale formatting, and dict-order dependence.  Floats
are written with repr (shortest round-trip form), JSON keys are sorted,
and line endings are LF on every platform.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import os

import numpy as np


def _plain(obj):
    """Recursively convert to json-serializable builtins."""
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return [_plain(x) for x in obj.tolist()]
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {k: _plain(v) for k, v in dataclasses.asdict(obj).items()}
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(x) for x in obj]
    if isinstance(obj, float) and obj != obj:
        raise ValueError("refusing to serialize NaN")
    return obj


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (np.floating, float)):
        return repr(float(v))
    if isinstance(v, (np.integer, int)) and not isinstance(v, bool):
        return str(int(v))
    return str(v)


def write_csv(path: str, columns, rows) -> None:
    """rows: iterable of dicts keyed by the column names."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        missing = [c for c in columns if c not in row]
        if missing:
            raise ValueError(f"row missing columns {missing}")
        w.writerow([_cell(row[c]) for c in columns])
    with io.open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(buf.getvalue())


def write_json(path: str, obj) -> None:
    text = json.dumps(_plain(obj), sort_keys=True, indent=2, ensure_ascii=False,
                      allow_nan=False)
    with io.open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text + "\n")


def write_manifest(out_dir: str, command: str, seed: int) -> str:
    """Hash every artifact in out_dir into manifest.json (excluding the
    manifest itself) and return the manifest path."""
    entries = []
    for name in sorted(os.listdir(out_dir)):
        if name == "manifest.json":
            continue
        fp = os.path.join(out_dir, name)
        if not os.path.isfile(fp):
            continue
        with io.open(fp, "rb") as fh:
            data = fh.read()
        entries.append({
            "name": name,
            "sha256": hashlib.sha256(data).hexdigest(),
            "bytes": len(data),
        })
    path = os.path.join(out_dir, "manifest.json")
    write_json(path, {"command": command, "seed": seed, "files": entries})
    return path

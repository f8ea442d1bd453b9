"""Artifact contracts: CSV headers and the hash manifest.

The column lists below are the interface between the lab and the plots;
they are duplicated here on purpose so that this side stays import-free.
Headers must match exactly, order included, or the file is rejected.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os

TUBE_COLUMNS = [
    "domain", "r", "R", "x_x", "x_y", "volume", "stderr", "method",
    "samples", "seed",
]
DIMENSION_COLUMNS = [
    "domain", "quantity", "value", "r_min", "r_max", "fit_r2",
    "spread_min", "spread_max", "n_centers", "n_scalepairs", "seed",
]
CUTOFF_COLUMNS = [
    "domain", "s", "p", "n", "seminorm_p", "stderr", "tube_volume",
    "tube_bound", "seed",
]
HARDY_SHELLS_COLUMNS = [
    "domain", "field_label", "s", "p", "shell", "contribution", "count",
    "seed",
]


class SchemaError(ValueError):
    """An input file does not satisfy the artifact contract."""


def read_rows(path: str, columns) -> list[dict]:
    """Read a CSV whose header equals `columns` exactly; rows as dicts of
    strings.  Anything else raises SchemaError."""
    columns = list(columns)
    if not os.path.isfile(path):
        raise SchemaError(f"missing artifact file {path}")
    with io.open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != columns:
            raise SchemaError(
                f"{os.path.basename(path)}: header {header} does not match "
                f"the expected schema {columns}")
        rows = []
        for rec in reader:
            if not rec:
                continue
            if len(rec) != len(columns):
                raise SchemaError(
                    f"{os.path.basename(path)}: row {len(rows) + 1} has "
                    f"{len(rec)} fields, expected {len(columns)}")
            rows.append(dict(zip(columns, rec)))
    if not rows:
        raise SchemaError(f"{os.path.basename(path)}: no data rows")
    return rows


def read_summary(artifact_dir: str) -> dict:
    path = os.path.join(artifact_dir, "summary.json")
    if not os.path.isfile(path):
        raise SchemaError(f"missing summary.json in {artifact_dir}")
    with io.open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def manifest_sha256(artifact_dir: str, filename: str) -> str:
    """The manifest-recorded sha256 of one artifact file, verified against
    the bytes actually on disk.

    Figures are stamped with this hash, so a stale or edited CSV must not
    slip through with the old label.
    """
    mpath = os.path.join(artifact_dir, "manifest.json")
    if not os.path.isfile(mpath):
        raise SchemaError(f"missing manifest.json in {artifact_dir}")
    with io.open(mpath, "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    entry = None
    for e in manifest.get("files", []):
        if e.get("name") == filename:
            entry = e
            break
    if entry is None:
        raise SchemaError(f"{filename} is not listed in manifest.json")
    with io.open(os.path.join(artifact_dir, filename), "rb") as fh:
        digest = hashlib.sha256(fh.read()).hexdigest()
    if digest != entry.get("sha256"):
        raise SchemaError(
            f"{filename} does not match its manifest hash; the artifact "
            "directory is stale or was edited")
    return digest

"""The four figure kinds.

Every number shown (slopes, bounds, spreads, flags) is read out of the
artifact files; drawing is the only thing that happens here.  Output is
deterministic: fixed svg hashsalt, text kept as text, no date metadata,
so the same artifact directory always yields identical bytes.
"""

from __future__ import annotations

import dataclasses
import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from fracplot.schema import (
    CUTOFF_COLUMNS,
    DIMENSION_COLUMNS,
    HARDY_SHELLS_COLUMNS,
    TUBE_COLUMNS,
    SchemaError,
    manifest_sha256,
    read_rows,
    read_summary,
)

matplotlib.rcParams["svg.fonttype"] = "none"
matplotlib.rcParams["svg.hashsalt"] = "fracplot"

KINDS = ("loglog_tube", "cutoff_decay", "codim_spread", "hardy_shells")


@dataclasses.dataclass(frozen=True)
class PlotJob:
    """One figure request: a kind, an artifact directory, an output path.

    csv_name only matters for cutoff_decay, where a run may carry several
    series (cutoff.csv, cutoff_below.csv, cutoff_above.csv).
    """

    kind: str
    artifact_dir: str
    out_path: str
    csv_name: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(
                f"unknown plot kind {self.kind!r}; expected one of "
                + ", ".join(KINDS))


def _floats(rows, key):
    try:
        return np.array([float(r[key]) for r in rows])
    except ValueError as e:
        raise SchemaError(f"non-numeric value in column {key}: {e}") from e


def _build_loglog_tube(job: PlotJob):
    tube = read_rows(os.path.join(job.artifact_dir, "tube.csv"), TUBE_COLUMNS)
    dims = read_rows(os.path.join(job.artifact_dir, "dimension.csv"),
                     DIMENSION_COLUMNS)
    fit = None
    for row in dims:
        if row["quantity"] == "tube_exponent":
            fit = row
            break
    if fit is None:
        raise SchemaError("dimension.csv carries no tube_exponent row; "
                          "is this a tube artifact directory?")
    r = _floats(tube, "r")
    vol = _floats(tube, "volume")
    err = _floats(tube, "stderr")
    slope = float(fit["value"])
    r2 = float(fit["fit_r2"])

    fig, ax = plt.subplots(figsize=(5.4, 4.1))
    ax.errorbar(r, vol, yerr=err, fmt="o", ms=4, lw=1.0, capsize=2,
                color="#2060a8", label="measured tube volume")
    # anchor the recorded slope at the log centroid of the data: a drawn
    # line, not a refit
    b = np.mean(np.log(vol)) - slope * np.mean(np.log(r))
    rr = np.array([r.min(), r.max()])
    ax.plot(rr, np.exp(b + slope * np.log(rr)), "--", color="#b03030",
            lw=1.3, label=f"fitted slope {slope:.4f}")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("r")
    ax.set_ylabel(r"$|\Omega_r|$")
    ax.set_title(f"{tube[0]['domain']}: inner tube decay")
    ax.annotate(f"exponent {slope:.4f}\nfit r2 {r2:.4f}",
                xy=(0.97, 0.05), xycoords="axes fraction",
                ha="right", va="bottom", fontsize=9,
                bbox=dict(boxstyle="round", fc="white", ec="0.6"))
    ax.legend(loc="upper left", fontsize=8)
    return fig, "tube.csv"


def _build_cutoff_decay(job: PlotJob):
    name = job.csv_name or "cutoff.csv"
    rows = read_rows(os.path.join(job.artifact_dir, name), CUTOFF_COLUMNS)
    n = _floats(rows, "n")
    val = _floats(rows, "seminorm_p")
    err = _floats(rows, "stderr")
    bound = _floats(rows, "tube_bound")
    s, p = rows[0]["s"], rows[0]["p"]

    fig, ax = plt.subplots(figsize=(5.4, 4.1))
    ax.errorbar(n, val, yerr=err, fmt="o-", ms=4, lw=1.0, capsize=2,
                color="#2060a8", label=r"$[v_n]^p$ measured")
    ax.plot(n, bound, "s--", ms=4, lw=1.1, color="#777777",
            label="tube-bound envelope")
    ax.set_xscale("log", base=2)
    ax.set_yscale("log")
    ax.set_xlabel("n")
    ax.set_ylabel("seminorm to the p")
    ax.set_title(f"{rows[0]['domain']}: cutoff decay at s={s}, p={p}")
    ax.legend(loc="best", fontsize=8)
    return fig, name


def _build_codim_spread(job: PlotJob):
    dims = read_rows(os.path.join(job.artifact_dir, "dimension.csv"),
                     DIMENSION_COLUMNS)
    val = _floats(dims, "value")
    lo = _floats(dims, "spread_min")
    hi = _floats(dims, "spread_max")
    yerr = np.vstack([np.maximum(val - lo, 0.0), np.maximum(hi - val, 0.0)])
    x = np.arange(len(dims))
    domains = {r["domain"] for r in dims}
    if len(domains) > 1:
        labels = [f"{r['domain']}\n{r['quantity']}" for r in dims]
    else:
        labels = [r["quantity"] for r in dims]

    fig, ax = plt.subplots(figsize=(5.6, 4.1))
    ax.errorbar(x, val, yerr=yerr, fmt="o", ms=5, capsize=5,
                color="#2060a8", ecolor="#888888")
    ax.set_xticks(x)
    ax.set_xticklabels(labels, rotation=20, ha="right", fontsize=8)
    ax.set_xlim(-0.5, len(dims) - 0.5)
    ax.set_ylabel("estimate")
    title = dims[0]["domain"] if len(domains) == 1 else "dimension battery"
    ax.set_title(f"{title}: estimates with percentile spread")
    ax.grid(True, axis="y", lw=0.4, alpha=0.5)
    return fig, "dimension.csv"


def _build_hardy_shells(job: PlotJob):
    rows = read_rows(os.path.join(job.artifact_dir, "hardy_shells.csv"),
                     HARDY_SHELLS_COLUMNS)
    summary = read_summary(job.artifact_dir)
    if "diverged" not in summary:
        raise SchemaError("summary.json carries no diverged flag; "
                          "is this a hardy artifact directory?")
    diverged = bool(summary["diverged"])
    shell = _floats(rows, "shell")
    contrib = _floats(rows, "contribution")
    s, p = rows[0]["s"], rows[0]["p"]

    fig, ax = plt.subplots(figsize=(5.4, 4.1))
    ax.bar(shell, contrib, width=0.8, color="#2060a8", alpha=0.85)
    if (contrib > 0).all():
        ax.set_yscale("log")
    ax.set_xlabel("dyadic shell k")
    ax.set_ylabel("shell contribution")
    ax.set_title(f"{rows[0]['domain']}, {rows[0]['field_label']}: "
                 f"Hardy shells at s={s}, p={p}")
    if diverged:
        note = "DIVERGED: shell sums keep growing"
        if "shell_slope" in summary:
            note += f"\nshell slope {float(summary['shell_slope']):+.3f}"
        ax.annotate(note, xy=(0.03, 0.95), xycoords="axes fraction",
                    ha="left", va="top", fontsize=9, color="#b03030",
                    bbox=dict(boxstyle="round", fc="#fff0f0", ec="#b03030"))
    else:
        ax.annotate("converged", xy=(0.03, 0.95), xycoords="axes fraction",
                    ha="left", va="top", fontsize=9, color="#207020",
                    bbox=dict(boxstyle="round", fc="#f0fff0", ec="#207020"))
    return fig, "hardy_shells.csv"


_BUILDERS = {
    "loglog_tube": _build_loglog_tube,
    "cutoff_decay": _build_cutoff_decay,
    "codim_spread": _build_codim_spread,
    "hardy_shells": _build_hardy_shells,
}


def _save(fig, path: str, csv_name: str, sha: str) -> None:
    ext = os.path.splitext(path)[1].lower()
    desc = f"source {csv_name} sha256 {sha}"
    if ext == ".svg":
        meta = {"Date": None, "Creator": "fracplot", "Description": desc}
    elif ext == ".png":
        meta = {"Software": "fracplot", "Description": desc}
    else:
        raise SchemaError(
            f"unsupported figure format {ext or path!r}; use .svg or .png")
    fig.savefig(path, metadata=meta)


def run_job(job: PlotJob) -> str:
    """Render one figure and return its output path.

    The caption and the embedded metadata both carry the manifest sha256
    of the CSV the figure was drawn from.
    """
    fig, csv_name = _BUILDERS[job.kind](job)
    try:
        sha = manifest_sha256(job.artifact_dir, csv_name)
        fig.text(0.01, 0.005, f"{csv_name}  manifest sha256 {sha[:16]}",
                 fontsize=6, color="#555555", family="monospace")
        fig.subplots_adjust(bottom=0.17)
        _save(fig, job.out_path, csv_name, sha)
    finally:
        plt.close(fig)
    return job.out_path

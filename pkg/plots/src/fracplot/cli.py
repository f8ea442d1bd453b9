"""fracplot command line.

    fracplot <kind> <artifact_dir> [--out FIG.svg] [--csv NAME]

kind is one of loglog_tube, cutoff_decay, codim_spread, hardy_shells.
Exit codes: 0 success, 2 rejected or stale artifacts, 3 usage errors.
"""

from __future__ import annotations

import argparse
import sys

from fracplot.figures import KINDS, PlotJob, run_job
from fracplot.schema import SchemaError

_HELP = {
    "loglog_tube": "log-log tube volumes with the fitted slope overlaid",
    "cutoff_decay": "cutoff seminorms against n with the tube-bound envelope",
    "codim_spread": "dimension estimates with their percentile spread bands",
    "hardy_shells": "per-shell Hardy contributions with the divergence flag",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fracplot",
        description="Draw figures from a fraclab artifact directory.")
    sub = parser.add_subparsers(dest="kind", required=True,
                                metavar="{" + ",".join(KINDS) + "}")
    for kind in KINDS:
        sp = sub.add_parser(kind, help=_HELP[kind])
        sp.add_argument("artifact_dir",
                        help="directory holding the CSVs, summary.json and "
                             "manifest.json of one run")
        sp.add_argument("--out", default="",
                        help="output figure path, .svg or .png "
                             "(default: <kind>.svg in the working directory)")
        if kind == "cutoff_decay":
            sp.add_argument("--csv", default="cutoff.csv",
                            help="which series to draw: cutoff.csv, "
                                 "cutoff_below.csv or cutoff_above.csv")
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        # argparse exits 0 for --help, 2 for usage errors; fold the latter
        # into our usage code
        return 0 if e.code == 0 else 3
    job = PlotJob(kind=args.kind, artifact_dir=args.artifact_dir,
                  out_path=args.out or f"{args.kind}.svg",
                  csv_name=getattr(args, "csv", ""))
    try:
        out = run_job(job)
    except (SchemaError, OSError) as e:
        print(f"plot error: {e}", file=sys.stderr)
        return 2
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())

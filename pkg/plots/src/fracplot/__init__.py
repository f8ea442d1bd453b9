"""Figures from fraclab artifact directories.

This package reads the CSV/JSON files the lab writes and draws them; it
never imports the lab and never recomputes a statistic.  If a header or
manifest hash is off, it refuses to draw.
"""

from fracplot.figures import KINDS, PlotJob, run_job
from fracplot.schema import (
    CUTOFF_COLUMNS,
    DIMENSION_COLUMNS,
    HARDY_SHELLS_COLUMNS,
    TUBE_COLUMNS,
    SchemaError,
)

__all__ = [
    "KINDS",
    "PlotJob",
    "run_job",
    "SchemaError",
    "TUBE_COLUMNS",
    "DIMENSION_COLUMNS",
    "CUTOFF_COLUMNS",
    "HARDY_SHELLS_COLUMNS",
]

__version__ = "0.1.0"

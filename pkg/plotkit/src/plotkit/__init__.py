"""Static scaling figures from plateau-lab variance reports."""

__version__ = "0.1.0"

from .render import PlotJob, SeriesFilter, build_figure, render
from .schema import ReportRow, SchemaError, load_report

__all__ = [
    "PlotJob",
    "SeriesFilter",
    "ReportRow",
    "SchemaError",
    "build_figure",
    "load_report",
    "render",
]

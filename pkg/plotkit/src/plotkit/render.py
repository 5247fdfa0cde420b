"""Variance-vs-width figures: one errorbar series per filter, optional exact
and bound overlays, log-scale y axis by default.

Rendering is a pure function of the CSV bytes and the job parameters; figure
size, dpi, and fonts are pinned so repeated invocations produce identical
image bytes.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "plateau-plotkit"  # deterministic SVG ids
import matplotlib.pyplot as plt

from .schema import ReportRow, load_report

FIGSIZE = (6.4, 4.8)
DPI = 100

_FILTER_KEYS = {"family": "family", "cost": "cost_kind", "cost_kind": "cost_kind",
                "scheme": "scheme"}


@dataclass(frozen=True)
class SeriesFilter:
    family: str | None = None
    cost_kind: str | None = None
    scheme: str | None = None

    @classmethod
    def parse(cls, text: str) -> "SeriesFilter":
        values: dict[str, str] = {}
        for part in text.split(","):
            if not part:
                continue
            if "=" not in part:
                raise ValueError(f"bad series term {part!r}; expected key=value")
            key, val = part.split("=", 1)
            if key not in _FILTER_KEYS:
                raise ValueError(f"unknown series key {key!r}")
            values[_FILTER_KEYS[key]] = val
        return cls(**values)

    def matches(self, row: ReportRow) -> bool:
        return (
            (self.family is None or row.family == self.family)
            and (self.cost_kind is None or row.cost_kind == self.cost_kind)
            and (self.scheme is None or row.scheme == self.scheme)
        )

    def label(self) -> str:
        parts = [v for v in (self.family, self.cost_kind, self.scheme) if v is not None]
        return "/".join(parts) if parts else "all rows"


@dataclass(frozen=True)
class PlotJob:
    input_csv: str
    output_image: str
    series: tuple[SeriesFilter, ...]
    overlays: str = "both"  # exact | bound | both | none
    y_scale: str = "log"

    def __post_init__(self):
        if self.overlays not in ("exact", "bound", "both", "none"):
            raise ValueError(f"unknown overlay mode {self.overlays!r}")
        if self.y_scale not in ("log", "linear"):
            raise ValueError(f"unknown y scale {self.y_scale!r}")
        if not self.series:
            raise ValueError("at least one series filter required")


def build_figure(job: PlotJob, rows: list[ReportRow]):
    """Assemble the figure; values are taken from the rows verbatim."""
    fig, ax = plt.subplots(figsize=FIGSIZE, dpi=DPI)
    plotted_any = False
    for sf in job.series:
        selected = sorted((r for r in rows if sf.matches(r)), key=lambda r: r.n)
        if not selected:
            plt.close(fig)
            raise ValueError(f"series {sf.label()!r} selects no rows")
        ns = [r.n for r in selected]
        var = [r.grad_var for r in selected]
        err_lo = [r.grad_var - r.var_ci_lo for r in selected]
        err_hi = [r.var_ci_hi - r.grad_var for r in selected]
        ax.errorbar(
            ns, var, yerr=[err_lo, err_hi], marker="o", capsize=3, linestyle="-",
            label=sf.label(),
        )
        plotted_any = True
        if job.overlays in ("exact", "both"):
            pts = [(r.n, r.exact_value) for r in selected if r.exact_value is not None]
            if pts:
                ax.plot(*zip(*pts), linestyle="--", label=f"{sf.label()} exact")
        if job.overlays in ("bound", "both"):
            pts = [(r.n, r.bound_value) for r in selected if r.bound_value is not None]
            if pts:
                ax.plot(*zip(*pts), linestyle=":", label=f"{sf.label()} bound")
    if not plotted_any:
        plt.close(fig)
        raise ValueError("no series plotted")
    ax.set_xlabel("qubits per layer n")
    ax.set_ylabel("gradient variance")
    ax.set_yscale(job.y_scale)
    ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    return fig


def render(job: PlotJob) -> None:
    """Read the report, build the figure, and write the image file."""
    rows = load_report(job.input_csv)
    fig = build_figure(job, rows)
    try:
        fig.savefig(job.output_image, dpi=DPI)
    finally:
        plt.close(fig)

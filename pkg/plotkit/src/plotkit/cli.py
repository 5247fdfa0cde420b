"""plateau-plot: render a variance-report CSV into a static figure."""
from __future__ import annotations

import argparse
import sys

from .render import PlotJob, SeriesFilter, render
from .schema import SchemaError


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="plateau-plot",
        description="Variance-vs-width figure from a plateau-lab CSV report",
    )
    parser.add_argument("--in", dest="input_csv", required=True, help="report CSV path")
    parser.add_argument("--out", dest="output_image", required=True, help="image path (.png/.svg)")
    parser.add_argument(
        "--series",
        action="append",
        default=[],
        help="filter like family=local-m1,cost=global; repeatable, one series each",
    )
    parser.add_argument(
        "--overlay", choices=("exact", "bound", "both", "none"), default="both"
    )
    scale = parser.add_mutually_exclusive_group()
    scale.add_argument("--logy", dest="y_scale", action="store_const", const="log")
    scale.add_argument("--linear", dest="y_scale", action="store_const", const="linear")
    parser.set_defaults(y_scale="log")
    args = parser.parse_args(argv)

    try:
        series = tuple(SeriesFilter.parse(s) for s in args.series) or (SeriesFilter(),)
        job = PlotJob(
            input_csv=args.input_csv,
            output_image=args.output_image,
            series=series,
            overlays=args.overlay,
            y_scale=args.y_scale,
        )
        render(job)
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())

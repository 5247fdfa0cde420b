"""Reader for the variance-report CSV schema.

Comment lines start with '#'; the header row must match the schema exactly.
Values are taken verbatim (no numeric post-processing beyond parsing); absent
optionals are empty strings.
"""
from __future__ import annotations

from dataclasses import dataclass

COLUMNS = [
    "n",
    "family",
    "cost_kind",
    "scheme",
    "samples",
    "grad_mean",
    "grad_mean_stderr",
    "grad_var",
    "var_ci_lo",
    "var_ci_hi",
    "exact_value",
    "bound_value",
    "seed",
    "wall_time_ms",
]

_INT_COLUMNS = {"n", "samples", "seed"}
_OPTIONAL_COLUMNS = {"exact_value", "bound_value", "wall_time_ms"}
_TEXT_COLUMNS = {"family", "cost_kind", "scheme"}


class SchemaError(ValueError):
    """Input does not conform to the report schema; carries the line number."""

    def __init__(self, line_number: int, message: str):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


@dataclass(frozen=True)
class ReportRow:
    n: int
    family: str
    cost_kind: str
    scheme: str
    samples: int
    grad_mean: float
    grad_mean_stderr: float
    grad_var: float
    var_ci_lo: float
    var_ci_hi: float
    exact_value: float | None
    bound_value: float | None
    seed: int
    wall_time_ms: float | None


def _parse_cell(column: str, text: str, line_number: int):
    if text == "":
        if column in _OPTIONAL_COLUMNS:
            return None
        raise SchemaError(line_number, f"column {column!r} must not be empty")
    if column in _TEXT_COLUMNS:
        return text
    try:
        return int(text) if column in _INT_COLUMNS else float(text)
    except ValueError:
        raise SchemaError(line_number, f"column {column!r} has non-numeric value {text!r}") from None


def load_report(path: str) -> list[ReportRow]:
    """Parse a report file, enforcing the exact column set and order."""
    rows: list[ReportRow] = []
    header_seen = False
    with open(path, "r", encoding="utf-8") as fh:
        for line_number, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            cells = line.split(",")
            if not header_seen:
                if cells != COLUMNS:
                    raise SchemaError(line_number, f"bad header {cells!r}")
                header_seen = True
                continue
            if len(cells) != len(COLUMNS):
                raise SchemaError(
                    line_number, f"expected {len(COLUMNS)} cells, found {len(cells)}"
                )
            values = {
                col: _parse_cell(col, cell, line_number)
                for col, cell in zip(COLUMNS, cells)
            }
            rows.append(ReportRow(**values))
    if not header_seen:
        raise SchemaError(0, "missing header row")
    return rows

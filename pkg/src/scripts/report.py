import csv
import io
from typing import List, Optional, Sequence

from pydantic import BaseModel, ConfigDict, TypeAdapter, computed_field

CSV_HEADER = ["quantity", "value", "crosscheck", "abs_err", "rel_err", "tol", "pass"]


class ReportRow(BaseModel):
    """One extracted quantity and its cross-check.

    A row passes when ``|value - crosscheck| <= tol * max(1, |crosscheck|)``; rows
    without a cross-check are informational and always pass.
    """

    model_config = ConfigDict(frozen=True)

    quantity: str
    value: float
    crosscheck: Optional[float] = None
    tol: float

    @computed_field
    @property
    def abs_err(self) -> Optional[float]:
        if self.crosscheck is None:
            return None
        return abs(self.value - self.crosscheck)

    @computed_field
    @property
    def rel_err(self) -> Optional[float]:
        if self.crosscheck is None:
            return None
        return self.abs_err / abs(self.crosscheck) if self.crosscheck != 0.0 else self.abs_err

    @computed_field
    @property
    def passed(self) -> bool:
        if self.crosscheck is None:
            return True
        return self.abs_err <= self.tol * max(1.0, abs(self.crosscheck))


def _number(value: Optional[float]) -> str:
    return "" if value is None else "%.17g" % value


def render_csv(rows: Sequence[ReportRow]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow(
            [
                row.quantity,
                _number(row.value),
                _number(row.crosscheck),
                _number(row.abs_err),
                _number(row.rel_err),
                _number(row.tol),
                "true" if row.passed else "false",
            ]
        )
    return buffer.getvalue()


def render_table(rows: Sequence[ReportRow], title: str = "") -> str:
    def short(value: Optional[float]) -> str:
        return "-" if value is None else f"{value:.12g}"

    body = [
        [row.quantity, short(row.value), short(row.crosscheck), short(row.abs_err), short(row.rel_err),
         f"{row.tol:g}", "ok" if row.passed else "FAIL"]
        for row in rows
    ]
    header = ["quantity", "value", "crosscheck", "abs_err", "rel_err", "tol", "pass"]
    widths = [max(len(line[i]) for line in [header] + body) for i in range(len(header))]
    lines: List[str] = [title] if title else []
    for line in [header] + body:
        lines.append("  ".join(cell.ljust(width) for cell, width in zip(line, widths)).rstrip())
    return "\n".join(lines) + "\n"


def failures(rows: Sequence[ReportRow]) -> List[ReportRow]:
    return [row for row in rows if not row.passed]


def render_json(rows: Sequence[ReportRow]) -> str:
    """Rows as a JSON list, computed fields included."""
    return TypeAdapter(List[ReportRow]).dump_json(list(rows), indent=2).decode("utf-8") + "\n"

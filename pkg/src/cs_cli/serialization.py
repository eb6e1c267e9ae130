import csv
import json
import math
from typing import IO, Any, Dict, List, Optional, Sequence, Tuple

import pandas as pd

from cs_core.confidence_set import ConfidenceSet, Interval

FORMATS = ("csv", "jsonl")


def format_real(x: float) -> str:
    """17 significant digits, with inf / -inf / nan spelled out."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return "%.17g" % x


def parse_real(s: str) -> float:
    return float(s.strip())


def format_set(cs: ConfidenceSet) -> str:
    """'lo1:hi1|lo2:hi2|...', or 'empty'."""
    if cs.is_empty:
        return "empty"
    return "|".join(f"{format_real(iv.lo)}:{format_real(iv.hi)}" for iv in cs.intervals)


def parse_set(s: str) -> ConfidenceSet:
    s = s.strip()
    if s == "empty":
        return ConfidenceSet.empty()
    pieces = []
    for chunk in s.split("|"):
        lo, hi = chunk.split(":")
        pieces.append(Interval(parse_real(lo), parse_real(hi)))
    return ConfidenceSet(pieces)


def _encode(value: Any, fmt: str) -> Any:
    if isinstance(value, ConfidenceSet):
        return format_set(value)
    if isinstance(value, bool) or value is None:
        return value if fmt == "jsonl" else ("" if value is None else str(value).lower())
    if isinstance(value, float):
        if fmt == "jsonl":
            return value if math.isfinite(value) else format_real(value)
        return format_real(value)
    if hasattr(value, "item"):
        # numpy scalars
        return _encode(value.item(), fmt)
    return value if fmt == "jsonl" else str(value)


class RowWriter:
    """Writes rows with a fixed column list as csv or jsonl."""

    def __init__(self, out: IO[str], columns: Sequence[str], fmt: str = "csv"):
        if fmt not in FORMATS:
            raise ValueError(f"unknown format '{fmt}', expected one of {FORMATS}")
        self.out = out
        self.columns = list(columns)
        self.fmt = fmt
        self.error_rows = 0
        self._csv = csv.writer(out, lineterminator="\n") if fmt == "csv" else None
        if self._csv is not None:
            self._csv.writerow(self.columns)

    def write(self, row: Dict[str, Any]) -> None:
        values = {c: _encode(row.get(c), self.fmt) for c in self.columns}
        if self._csv is not None:
            self._csv.writerow([values[c] if values[c] is not None else "" for c in self.columns])
        else:
            self.out.write(json.dumps(values) + "\n")

    def write_error(self, row_number: int, message: str) -> None:
        self.error_rows += 1
        row = {c: None for c in self.columns}
        row[self.columns[0]] = row_number
        row["error"] = message
        self.write(row)


def write_frame(frame: pd.DataFrame, out: IO[str], fmt: str = "csv") -> None:
    writer = RowWriter(out, [str(c) for c in frame.columns], fmt)
    for record in frame.to_dict(orient="records"):
        writer.write({str(k): v for k, v in record.items()})


def parse_input_line(line: str) -> Optional[Tuple[float, Optional[float]]]:
    """
    One input row: 'x' or 'x,bound' (comma, tab or whitespace separated).

    Returns None for blank and '#' lines; raises ValueError on malformed rows.
    """
    text = line.strip()
    if not text or text.startswith("#"):
        return None
    fields = [f for f in text.replace(",", " ").replace("\t", " ").split(" ") if f]
    if len(fields) > 2:
        raise ValueError(f"expected 'x' or 'x,bound', got {len(fields)} fields")
    x = parse_real(fields[0])
    bound = parse_real(fields[1]) if len(fields) == 2 else None
    if not math.isfinite(x):
        raise ValueError(f"observation must be finite, got {fields[0]!r}")
    return x, bound


def parse_float_list(text: str) -> List[float]:
    return [float(s) for s in text.split(",") if s.strip()]


def parse_int_list(text: str) -> List[int]:
    return [int(s) for s in text.split(",") if s.strip()]

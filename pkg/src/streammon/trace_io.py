"""CSV traces in, verdict lines out.

A trace has one column per input stream plus a ``time`` column holding
seconds relative to monitor start. ``#`` marks an input without a new value.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from decimal import ROUND_HALF_EVEN, Decimal, InvalidOperation
from typing import Iterable, Iterator, Optional, TextIO

from .engine.arith import format_value
from .engine.monitor import Event, Verdict
from .valuetypes import BOOL, FLOAT, INT, INT_MAX, INT_MIN, STRING, UINT, UINT_MAX, ValueType

ABSENT = "#"
NS_PER_S = Decimal(10**9)


class TraceError(Exception):
    def __init__(self, message: str, row: Optional[int] = None):
        self.row = row
        super().__init__(f"row {row}: {message}" if row is not None else message)


@dataclass(frozen=True)
class TraceHeader:
    columns: tuple[str, ...]
    time_index: Optional[int]
    types: dict[str, ValueType]  # only the columns that name inputs

    @classmethod
    def parse(cls, columns: list[str], inputs: dict[str, ValueType], *, strict: bool = True,
              require_time: bool = True) -> "TraceHeader":
        columns = [c.strip() for c in columns]
        if len(set(columns)) != len(columns):
            raise TraceError("duplicate column in header", 1)
        time_index = columns.index("time") if "time" in columns else None
        if time_index is None and require_time:
            raise TraceError("header has no 'time' column", 1)
        names = [c for c in columns if c != "time"]
        if strict:
            extra = [c for c in names if c not in inputs]
            missing = [n for n in inputs if n not in names]
            if extra:
                raise TraceError(f"column(s) {', '.join(extra)} name no input stream", 1)
            if missing:
                raise TraceError(f"input(s) {', '.join(missing)} missing from header", 1)
        types = {c: inputs[c] for c in names if c in inputs}
        return cls(tuple(columns), time_index, types)


def parse_time(text: str) -> int:
    """Seconds as a decimal string to nanoseconds, rounding to the nearest ns."""
    try:
        seconds = Decimal(text.strip())
    except InvalidOperation:
        raise ValueError(f"'{text}' is not a decimal number of seconds") from None
    if not seconds.is_finite() or seconds < 0:
        raise ValueError(f"time '{text}' must be a non-negative number")
    return int((seconds * NS_PER_S).quantize(Decimal(1), rounding=ROUND_HALF_EVEN))


def format_time(ns: int) -> str:
    """Shortest decimal seconds string for ``ns`` nanoseconds."""
    text = format(Decimal(ns) / NS_PER_S, "f")
    if "." in text:
        text = text.rstrip("0").rstrip(".")
    return text


def parse_cell(text: str, t: ValueType):
    if t == BOOL:
        low = text.strip().lower()
        if low not in ("true", "false"):
            raise ValueError(f"'{text}' is not a boolean")
        return low == "true"
    if t == INT or t == UINT:
        v = int(text.strip())
        lo, hi = (INT_MIN, INT_MAX) if t == INT else (0, UINT_MAX)
        if not lo <= v <= hi:
            raise ValueError(f"{v} is out of range for {t}")
        return v
    if t == FLOAT:
        return float(text.strip())
    if t == STRING:
        return text
    raise ValueError(f"inputs of type {t} cannot be read from CSV")


def read_event(row: list[str], header: TraceHeader, row_number: Optional[int] = None,
               time: Optional[int] = None) -> Optional[Event]:
    """Decode one CSV record. ``time`` overrides the time column (online mode).

    Returns None for a row whose only values sit in columns that name no
    input (possible with a lax header).
    """
    if len(row) != len(header.columns):
        raise TraceError(f"expected {len(header.columns)} fields, found {len(row)}", row_number)
    values = {}
    ignored = False
    for column, cell in zip(header.columns, row):
        if column == "time" or cell.strip() == ABSENT:
            continue
        if column not in header.types:
            ignored = True
            continue
        try:
            values[column] = parse_cell(cell, header.types[column])
        except ValueError as exc:
            raise TraceError(f"column '{column}': {exc}", row_number) from None
    if not values:
        if ignored:
            return None
        raise TraceError("event carries no input value (every cell is '#')", row_number)
    if time is None:
        if header.time_index is None:
            raise TraceError("no time column and no timestamp supplied", row_number)
        try:
            time = parse_time(row[header.time_index])
        except ValueError as exc:
            raise TraceError(str(exc), row_number) from None
    return Event(time, values)


def read_trace(stream: TextIO, inputs: dict[str, ValueType], *, strict: bool = True) -> Iterator[Event]:
    """Yield events from a CSV trace, checking that time never decreases."""
    reader = csv.reader(stream)
    try:
        first = next(reader)
    except StopIteration:
        raise TraceError("trace is empty (no header)", 1) from None
    header = TraceHeader.parse(first, inputs, strict=strict)
    last = None
    for number, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        event = read_event(row, header, number)
        if event is None:
            continue
        if last is not None and event.time < last:
            raise TraceError(f"time goes backwards ({format_time(event.time)} s after {format_time(last)} s)", number)
        last = event.time
        yield event


def _csv_line(fields: list[str]) -> str:
    # Lines are terminated by the caller, so the writer does not know that
    # embedded line breaks need quoting.
    quoting = csv.QUOTE_ALL if any("\r" in f or "\n" in f for f in fields) else csv.QUOTE_MINIMAL
    out = io.StringIO()
    csv.writer(out, lineterminator="", quoting=quoting).writerow(fields)
    return out.getvalue()


def write_events(events: Iterable[Event], inputs: list[str]) -> str:
    """Encode events as a CSV trace; inverse of :func:`read_trace`."""
    lines = [_csv_line(list(inputs) + ["time"])]
    for e in events:
        lines.append(_csv_line([format_value(e.values[n]) if n in e.values else ABSENT for n in inputs]
                               + [format_time(e.time)]))
    return "".join(line + "\n" for line in lines)


def write_verdict(v: Verdict) -> str:
    """``<seconds>,<trigger>,<message>`` with CSV quoting where needed."""
    name = v.trigger if v.kind == "trigger" else f"error:{v.trigger}"
    return _csv_line([format_time(v.time), name, v.message])


def write_record(time: int, stream: str, params: tuple, value) -> str:
    name = stream + ("(" + ", ".join(format_value(p) for p in params) + ")" if params else "")
    return _csv_line([format_time(time), name, format_value(value)])

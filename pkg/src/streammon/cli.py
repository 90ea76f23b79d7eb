"""Command-line entry point: ``analyze`` and ``monitor``."""

from __future__ import annotations

import argparse
import csv
import queue
import sys
import threading
import time as wallclock
from typing import Optional, TextIO

from .diagnostics import SpecError
from .engine import MonitorError, InternalError, new_monitor
from .pipeline import CheckedSpec, check
from .trace_io import TraceError, TraceHeader, format_time, read_event, read_trace, write_record, write_verdict

EXIT_OK, EXIT_REJECTED, EXIT_TRACE, EXIT_INTERNAL = 0, 1, 2, 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="streammon", description="Check and run stream monitoring specifications.")
    sub = parser.add_subparsers(dest="command", required=True)

    analyze = sub.add_parser("analyze", help="check a specification and print its types and memory bounds")
    analyze.add_argument("spec")
    analyze.add_argument("--dot", action="store_true", help="also print the dependency graph in DOT format")

    monitor = sub.add_parser("monitor", help="run a specification against a trace")
    mode = monitor.add_mutually_exclusive_group(required=True)
    mode.add_argument("--offline", choices=["relative"],
                      help="replay a recorded CSV trace; 'relative' means the time column holds "
                           "seconds since monitor start (the only supported format)")
    mode.add_argument("--online", action="store_true", help="read events from standard input as they arrive")
    monitor.add_argument("--csv-in", metavar="FILE", help="trace file for --offline")
    monitor.add_argument("--stdin", action="store_true", help="read the CSV trace from standard input (--online)")
    monitor.add_argument("--verbosity", choices=["triggers", "streams"], default="triggers",
                         help="print trigger verdicts only, or every stream value as well")
    monitor.add_argument("--lax", action="store_true",
                         help="allow trace columns that name no input and inputs without a column")
    monitor.add_argument("spec")
    return parser


def _load(path: str, err: TextIO) -> Optional[CheckedSpec]:
    try:
        with open(path, encoding="utf-8") as f:
            source = f.read()
    except (OSError, UnicodeDecodeError) as exc:
        print(f"{path}: error: cannot read specification: {exc}", file=err)
        return None
    try:
        return check(source)
    except SpecError as exc:
        print(exc.render(source, path), file=err)
        return None


def analyze(args, out: TextIO, err: TextIO) -> int:
    checked = _load(args.spec, err)
    if checked is None:
        return EXIT_REJECTED
    out.write(checked.type_table())
    out.write("evaluation order: " + " < ".join("{" + ", ".join(layer) + "}" for layer in checked.layers) + "\n")
    if args.dot:
        out.write(checked.graph.to_dot())
    return EXIT_OK


class _Printer:
    def __init__(self, out: TextIO, streams: bool):
        self.out = out
        self.streams = streams

    def __call__(self, monitor, verdicts):
        if self.streams:
            for record in monitor.records:
                self.out.write(write_record(*record) + "\n")
            monitor.records.clear()
        for v in verdicts:
            self.out.write(write_verdict(v) + "\n")


def monitor(args, out: TextIO, err: TextIO, stdin: TextIO) -> int:
    if args.offline and not args.csv_in:
        print("monitor: --offline needs --csv-in FILE", file=err)
        return EXIT_TRACE
    if args.online and not args.stdin:
        print("monitor: --online needs --stdin", file=err)
        return EXIT_TRACE
    checked = _load(args.spec, err)
    if checked is None:
        return EXIT_REJECTED
    inputs = {d.name: checked.values.streams[d.name] for d in checked.spec.inputs}
    printer = _Printer(out, args.verbosity == "streams")
    mon = new_monitor(checked, record=printer.streams, observer=printer)
    try:
        if args.offline:
            with open(args.csv_in, newline="", encoding="utf-8") as f:
                for event in read_trace(f, inputs, strict=not args.lax):
                    mon.accept_event(event)
            mon.finish()
        else:
            _run_online(mon, stdin, inputs, strict=not args.lax)
    except OSError as exc:
        print(f"monitor: cannot read trace: {exc}", file=err)
        return EXIT_TRACE
    except TraceError as exc:
        print(f"{args.csv_in or '<stdin>'}: {exc}", file=err)
        return EXIT_TRACE
    except InternalError as exc:
        print(f"monitor: internal error: {exc}", file=err)
        return EXIT_INTERNAL
    except MonitorError as exc:
        print(f"monitor: {exc}", file=err)
        return EXIT_TRACE
    finally:
        out.flush()
    return EXIT_OK


_EOF = object()


def _run_online(mon, stdin: TextIO, inputs, *, strict: bool) -> None:
    """Feed stdin lines to the monitor as they arrive and fire deadlines on time.

    A reader thread hands lines over through a queue; the main loop waits for
    the next line or the next deadline, whichever comes first.
    """
    lines: queue.Queue = queue.Queue()

    def reader():
        for line in stdin:
            lines.put(line)
        lines.put(_EOF)

    threading.Thread(target=reader, daemon=True).start()
    origin = wallclock.monotonic_ns()
    now = lambda: wallclock.monotonic_ns() - origin  # noqa: E731
    header = None
    last = 0
    number = 0
    while True:
        # With a time column the trace is its own clock; otherwise deadlines follow wall time.
        clocked = header is not None and header.time_index is None
        deadline = mon.next_deadline if clocked else None
        timeout = None if deadline is None else max(0.0, (deadline - now()) / 1e9)
        try:
            item = lines.get(timeout=timeout)
        except queue.Empty:
            mon.advance_time(max(deadline, last))
            continue
        if item is _EOF:
            mon.finish()
            return
        number += 1
        row = next(csv.reader([item]), None)
        if not row or all(not c.strip() for c in row):
            continue
        if header is None:
            header = TraceHeader.parse(row, inputs, strict=strict, require_time=False)
            continue
        stamp = None if header.time_index is not None else max(now(), last)
        event = read_event(row, header, number, time=stamp)
        if event is None:
            continue
        if event.time < last:
            raise TraceError(f"time goes backwards ({format_time(event.time)} s after {format_time(last)} s)", number)
        last = event.time
        mon.accept_event(event)


def main(argv=None, *, stdout: TextIO = None, stderr: TextIO = None, stdin: TextIO = None) -> int:
    out = stdout or sys.stdout
    err = stderr or sys.stderr
    args = build_parser().parse_args(argv)
    try:
        if args.command == "analyze":
            return analyze(args, out, err)
        return monitor(args, out, err, stdin or sys.stdin)
    except Exception as exc:  # last-resort guard: report, never traceback
        print(f"streammon: internal error: {type(exc).__name__}: {exc}", file=err)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())

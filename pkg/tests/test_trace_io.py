import io
from decimal import Decimal

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from streammon import Event, Verdict
from streammon.trace_io import (TraceError, TraceHeader, format_time, parse_time, read_event, read_trace,
                                write_events, write_verdict)
from streammon.valuetypes import BOOL, FLOAT, INT, STRING, UINT

NS = 10**9
AB = {"a": INT, "b": INT}


def header(*cols, inputs=AB, strict=True):
    return TraceHeader.parse(list(cols), inputs, strict=strict)


def test_rows_of_the_three_row_trace():
    h = header("a", "b", "time")
    assert read_event(["#", "3", "1"], h) == Event(NS, {"b": 3})
    assert read_event(["1", "2", "0"], h) == Event(0, {"a": 1, "b": 2})
    with pytest.raises(TraceError, match="no input value"):
        read_event(["#", "#", "5"], h, 4)


def test_time_must_not_decrease():
    with pytest.raises(TraceError) as info:
        list(read_trace(io.StringIO("a,b,time\n1,2,3\n1,2,2.5\n"), AB))
    assert info.value.row == 3


def test_bad_cells_report_rows():
    with pytest.raises(TraceError) as info:
        list(read_trace(io.StringIO("a,b,time\n1,2,0\nx,2,1\n"), AB))
    assert info.value.row == 3 and "column 'a'" in str(info.value)
    with pytest.raises(TraceError):
        list(read_trace(io.StringIO("a,b,time\n1,2\n"), AB))
    with pytest.raises(TraceError):
        list(read_trace(io.StringIO("a,b,time\n1,2,-1\n"), AB))
    with pytest.raises(TraceError):
        list(read_trace(io.StringIO(""), AB))


def test_header_modes():
    with pytest.raises(TraceError, match="missing"):
        header("a", "time")
    with pytest.raises(TraceError, match="name no input"):
        header("a", "b", "c", "time")
    with pytest.raises(TraceError, match="time"):
        header("a", "b")
    lax = header("a", "c", "time", strict=False)
    assert read_event(["1", "9", "0"], lax) == Event(0, {"a": 1})
    assert read_event(["#", "9", "0"], lax) is None


def test_cell_types():
    types = {"f": FLOAT, "u": UINT, "s": STRING, "t": BOOL}
    h = TraceHeader.parse(["f", "u", "s", "t", "time"], types)
    assert read_event(["1.5", "7", "hi, there", "TRUE", "0.25"], h) == \
        Event(250_000_000, {"f": 1.5, "u": 7, "s": "hi, there", "t": True})
    with pytest.raises(TraceError):
        read_event(["1.5", "-1", "x", "true", "0"], h)
    with pytest.raises(TraceError):
        read_event(["1.5", "1", "x", "yes", "0"], h)


def test_time_conversion():
    assert parse_time("1") == NS
    assert parse_time("0.000000001") == 1
    assert parse_time("0.0000000005") == 0  # ties go to even
    assert parse_time("0.0000000015") == 2
    assert format_time(6 * NS) == "6"
    assert format_time(1_500_000_000) == "1.5"
    assert format_time(1) == "0.000000001"
    assert format_time(0) == "0"


@given(st.integers(0, 10**12), st.integers(0, 9))
def test_nanosecond_exact_for_nine_digits(whole, digits):
    frac = whole % (10**digits) if digits else 0
    text = f"{whole}.{frac:0{digits}d}" if digits else str(whole)
    exact = Decimal(text) * NS
    assert abs(parse_time(text) - exact) < 1
    assert parse_time(format_time(parse_time(text))) == parse_time(text)


def test_verdict_lines():
    assert write_verdict(Verdict(6 * NS, "trigger_0", (), "Too close to the intruder")) == \
        "6,trigger_0,Too close to the intruder"
    assert write_verdict(Verdict(NS // 2, "t", (), "a, b")) == '0.5,t,"a, b"'
    assert write_verdict(Verdict(NS, "trigger_0", (7,), "Intruder 7 detected")) == "1,trigger_0,Intruder 7 detected"
    assert write_verdict(Verdict(NS, "q", (), "integer division by zero", "error")) == \
        "1,error:q,integer division by zero"


TYPES = {"i": INT, "f": FLOAT, "s": STRING, "t": BOOL}
cells = {
    "i": st.integers(-(2**63), 2**63 - 1),
    "f": st.floats(allow_nan=False),
    # NUL cannot be written by the csv module at all
    "s": st.text(st.characters(blacklist_characters="\x00"), max_size=8).filter(lambda s: s.strip() != "#"),
    "t": st.booleans(),
}


@st.composite
def event_logs(draw):
    n = draw(st.integers(0, 12))
    t = 0
    events = []
    for _ in range(n):
        t += draw(st.integers(0, 5 * NS))
        present = draw(st.lists(st.sampled_from(list(TYPES)), min_size=1, unique=True))
        events.append(Event(t, {k: draw(cells[k]) for k in present}))
    return events


@settings(max_examples=300, deadline=None)
@given(event_logs())
def test_write_then_read_round_trip(events):
    text = write_events(events, list(TYPES))
    assert list(read_trace(io.StringIO(text, newline=""), TYPES)) == events

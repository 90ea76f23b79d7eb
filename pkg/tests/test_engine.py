import math
from collections import deque

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import run_corpus, spec_source
from streammon import Event, check, new_monitor
from streammon.engine import EventError, TimeRegressionError
from streammon.engine.aggregation import aggregate_values, instance_aggregate, sliding_window

NS = 10**9


def monitor_for(source, **options):
    return new_monitor(check(source), **options)


def outputs_alive(monitor):
    return sorted(s.name for s in monitor.outputs for _ in s.instances.values())


def test_static_intruder_starts_with_three_instances():
    monitor = monitor_for(spec_source("static_intruder"))
    assert outputs_alive(monitor) == ["closer", "distance", "trigger_0"]
    assert monitor.next_deadline is None


def test_moving_intruder_first_deadline():
    assert monitor_for(spec_source("moving_intruder")).next_deadline == NS


def test_inputs_only_monitor():
    monitor = monitor_for("input a: Int")
    assert outputs_alive(monitor) == []
    assert monitor.next_deadline is None
    assert monitor.accept_event(Event(5, {"a": 1})) == []


def test_zero_distance_takes_default_branch():
    monitor = monitor_for(spec_source("static_intruder"))
    verdicts = monitor.accept_event(Event(0, {"lat": 249.301, "lon": 23.453}))
    assert monitor.value("distance") == 0.0
    assert monitor.value("closer") is True
    assert [v.message for v in verdicts] == ["Too close to the intruder"]


def test_hold_versus_sync_access():
    sync = monitor_for(spec_source("sync_intruder"), record=True)
    hold = monitor_for(spec_source("moving_intruder"), record=True)
    first = {"lat": 1.0, "lon": 1.0, "intruder_lat": 2.0, "intruder_lon": 1.0}
    for m in (sync, hold):
        m.accept_event(Event(NS // 2, first))
        m.accept_event(Event(3 * NS, {"lat": 1.5, "lon": 1.0}))
    sync_times = [t for t, name, _, _ in sync.records if name == "distance"]
    hold_rows = [(t, v) for t, name, _, v in hold.records if name == "distance"]
    assert sync_times == [NS // 2]
    assert hold_rows == [(NS // 2, 1.0), (3 * NS, 0.5)]


def test_quiet_period_evaluates_trigger_every_second():
    monitor = monitor_for(spec_source("moving_intruder"), record=True)
    assert monitor.advance_time(3 * NS) == []
    rows = [(t, v) for t, name, _, v in monitor.records if name == "trigger_0"]
    assert rows == [(NS, False), (2 * NS, False), (3 * NS, False)]
    assert monitor.advance_time(3 * NS) == []


def test_offset_default_on_first_evaluation():
    monitor = monitor_for("input a: Int\noutput p := a.offset(by: -1).defaults(to: 0)", record=True)
    for t, v in enumerate([4, 5, 6]):
        monitor.accept_event(Event(t, {"a": v}))
    assert [v for *_, v in monitor.records] == [0, 4, 5]


def test_running_sum():
    monitor = monitor_for(spec_source("running_sum"), record=True)
    for t, v in enumerate([1, 2, 3]):
        monitor.accept_event(Event(t, {"a": v}))
    assert [v for *_, v in monitor.records] == [1, 3, 6]


def _fix(t, lat=0.0, lon=0.0):
    return Event(t, {"intruder_lat": lat, "intruder_lon": lon})


def test_stale_closes_and_respawns():
    monitor = monitor_for(spec_source("intruder_in_range"), record=True, check_invariants=True)
    assert monitor.instances("stale") == {}
    monitor.accept_event(_fix(NS))
    first = monitor.instances("stale")[()]
    assert first.spawn_time == NS
    monitor.accept_event(Event(5 * NS, {"lat": 1.0, "lon": 1.0}))
    monitor.advance_time(11 * NS)  # the window (1 s, 11 s] no longer holds the fix at 1 s
    assert monitor.instances("stale") == {}
    assert monitor.instances("distance") == {}
    stale_rows = [(t, v) for t, name, _, v in monitor.records if name == "stale"]
    assert stale_rows == [(11 * NS, True)]
    monitor.accept_event(_fix(12 * NS, 0.5, 0.5))
    again = monitor.instances("distance")[()]
    assert again.uid != first.uid and again.spawn_time == 12 * NS
    assert again.pushes == 1
    assert monitor.value("closer") is True  # no offset history survives close


def test_window_value_at_deadline_is_counted():
    monitor = monitor_for(spec_source("intruder_in_range"), record=True)
    monitor.accept_event(_fix(NS))
    monitor.accept_event(_fix(11 * NS))  # exactly at the first stale check
    monitor.advance_time(11 * NS)
    assert monitor.instances("stale")
    assert [v for t, name, _, v in monitor.records if name == "stale"] == [False]


def test_sliding_window_helpers():
    assert sliding_window(deque(), 5 * NS, 2 * NS, "count", False, 0) == 0
    assert sliding_window(deque(), 5 * NS, 2 * NS, "avg", False, 0) is None
    entries = deque([(1 * NS, 3), (3 * NS, 4), (4 * NS, 5)])
    assert sliding_window(entries, 5 * NS, 2 * NS, "sum", False, 0) == 5  # (3 s, 5 s]
    assert list(entries) == [(4 * NS, 5)]
    assert sliding_window(entries, 5 * NS, 10 * NS, "sum", True, 0) is None


@pytest.mark.parametrize("fn, values, expected", [
    ("count", [], 0), ("sum", [], 0), ("exists", [], False), ("forall", [], True),
    ("avg", [], None), ("min", [], None), ("max", [], None),
    ("max", [2, 5, 9], 9), ("min", [2, 5, 9], 2), ("avg", [2, 5, 9], 16 / 3), ("sum", [2, 5, 9], 16),
])
def test_aggregate_values(fn, values, expected):
    assert aggregate_values(fn, values) == expected


class _Inst:
    def __init__(self, value, fresh):
        self.buffer = [value]
        self.pushes = 1
        self.fresh_cycle = 7 if fresh else 3


def test_instance_aggregate_selection():
    insts = [_Inst(2, True), _Inst(5, False), _Inst(9, True)]
    assert instance_aggregate(insts, "max", "all", 7) == 9
    assert instance_aggregate(insts, "sum", "fresh", 7) == 11
    assert instance_aggregate([], "exists", "all", 7) is False
    assert instance_aggregate([_Inst(True, True)], "exists", "all", 7) is True


INSTANCE_MAX = """
input k: Int
input v: Int
output last(key)
    spawn with k
    eval @k && v@ when key = k with v
output top @k && v@ := last.aggregate(over_instances: all, using: max).defaults(to: 0)
output any_fresh @k && v@ := last.aggregate(over_instances: fresh, using: count)
"""


def test_instance_aggregation_through_engine():
    monitor = monitor_for(INSTANCE_MAX)
    for t, (k, v) in enumerate([(1, 2), (2, 5), (3, 9), (1, 4)]):
        monitor.accept_event(Event(t, {"k": k, "v": v}))
    assert {p: i.value for p, i in monitor.instances("last").items()} == {(1,): 4, (2,): 5, (3,): 9}
    assert monitor.value("top") == 9
    assert monitor.value("any_fresh") == 1


def test_math_and_ieee():
    monitor = monitor_for("import math\ninput x: Float\noutput d := sqrt((x - x) ** 2.0)\noutput q := x / 0.0")
    monitor.accept_event(Event(0, {"x": 249.301}))
    assert monitor.value("d") == 0.0
    assert monitor.value("q") == math.inf


def test_equal_when_conditions_mirror_input():
    source = "input a: Int\noutput x\n    eval @a@ when a > 4 with a\noutput y\n    eval @a@ when a > 4 with x"
    monitor = monitor_for(source, record=True)
    for t, a in enumerate([3, 5, 2, 8]):
        monitor.accept_event(Event(t, {"a": a}))
    assert [(t, v) for t, name, _, v in monitor.records if name == "x"] == [(1, 5), (3, 8)]
    assert [(t, v) for t, name, _, v in monitor.records if name == "y"] == [(1, 5), (3, 8)]


def test_hold_of_missing_instance_uses_default():
    checked = check(spec_source("multiple_intruders"))
    monitor = new_monitor(checked)
    monitor.accept_event(Event(0, {"lat": 0.0, "lon": 0.0}))
    assert monitor.instances("trigger_0") == {}
    # The trigger's spawn condition reads distance(intruder_id).hold(or: 1.0) before any instance exists.
    monitor.accept_event(Event(NS, {"intruder_id": 7, "intruder_lat": 0.0, "intruder_lon": 0.0}))
    assert (7,) not in monitor.instances("trigger_0")


def test_runtime_faults_become_error_verdicts():
    monitor = monitor_for("input a: Int\noutput q := 10 / a\noutput r := q + 1\ntrigger r > 100 \"big\"")
    verdicts = monitor.accept_event(Event(0, {"a": 0}))
    assert [(v.kind, v.trigger) for v in verdicts] == [("error", "q"), ("error", "r"), ("error", "trigger_0")]
    assert monitor.accept_event(Event(1, {"a": 2})) == []
    assert monitor.value("r") == 6


def test_overflow_is_a_runtime_fault():
    monitor = monitor_for("input a: Int\noutput big := a * a")
    verdicts = monitor.accept_event(Event(0, {"a": 2**62}))
    assert verdicts[0].kind == "error" and "overflow" in verdicts[0].message


def test_time_regression_and_bad_events():
    monitor = monitor_for("input a: Int\noutput o := a")
    monitor.accept_event(Event(5, {"a": 1}))
    with pytest.raises(TimeRegressionError):
        monitor.accept_event(Event(4, {"a": 1}))
    with pytest.raises(EventError):
        monitor.accept_event(Event(6, {"a": 1.5}))
    with pytest.raises(EventError):
        monitor.accept_event(Event(6, {}))
    with pytest.raises(EventError):
        monitor.accept_event(Event(6, {"o": 1}))


def test_parameterized_verdict_message():
    monitor = monitor_for(spec_source("multiple_intruders"))
    verdicts = []
    for k in range(0, 9):
        t = k * NS
        verdicts += monitor.accept_event(Event(t, {"lat": 0.0, "lon": 0.0, "intruder_id": 7,
                                                   "intruder_lat": 0.05 - 0.001 * k, "intruder_lon": 0.0}))
    assert verdicts
    assert {(v.trigger, v.params, v.message) for v in verdicts} == {("trigger_0", (7,), "Intruder 7 detected")}


@st.composite
def drone_events(draw):
    n = draw(st.integers(0, 30))
    t, out = 0, []
    for _ in range(n):
        t += draw(st.integers(0, 2 * NS))
        keys = draw(st.sampled_from([("lat", "lon"), ("intruder_lat", "intruder_lon"),
                                     ("lat", "lon", "intruder_lat", "intruder_lon")]))
        out.append(Event(t, {k: draw(st.floats(-0.2, 0.2, allow_nan=False)) for k in keys}))
    return out


def _replay(source, events):
    monitor = monitor_for(source, check_invariants=True)
    verdicts = []
    for e in events:
        verdicts += monitor.accept_event(e)
    verdicts += monitor.advance_time(max([e.time for e in events], default=0) + 6 * NS)
    return verdicts


@settings(max_examples=60, deadline=None)
@given(drone_events())
def test_deterministic_and_time_ordered(events):
    for name in ("moving_intruder", "intruder_in_range", "sync_intruder"):
        source = spec_source(name)
        first, second = _replay(source, events), _replay(source, events)
        assert first == second
        times = [v.time for v in first]
        assert times == sorted(times)
        assert all(v.kind == "trigger" for v in first)


def test_lifecycle_invariants_on_corpus():
    for spec_name, trace_name, lax in [("multiple_intruders", "intruders.csv", False),
                                       ("instance_aggregation", "intruders.csv", False)]:
        uids_seen = set()
        closed = set()

        def observe(monitor, verdicts):
            for s in monitor.outputs:
                live = list(s.instances.values())
                assert len({i.params for i in live}) == len(live)
                for i in live:
                    assert i.alive and i.uid not in closed
                    uids_seen.add(i.uid)
            closed.update(uids_seen - {i.uid for s in monitor.outputs for i in s.instances.values()})

        run_corpus(spec_name, trace_name, lax, observer=observe, check_invariants=True)
        assert closed

import sys
from pathlib import Path

import pytest

from streammon import check, new_monitor
from streammon.trace_io import read_trace

ROOT = Path(__file__).resolve().parent.parent
SPECS = ROOT / "specs"
TRACES = ROOT / "traces"

sys.path.insert(0, str(Path(__file__).resolve().parent))


def spec_source(name: str) -> str:
    return (SPECS / f"{name}.lola").read_text()


CORPUS = [
    ("static_intruder", "drone.csv", True),
    ("sync_intruder", "drone.csv", False),
    ("moving_intruder", "drone.csv", False),
    ("intruder_in_range", "drone.csv", False),
    ("multiple_intruders", "intruders.csv", False),
    ("instance_aggregation", "intruders.csv", False),
    ("passthrough", "three_rows.csv", False),
    ("running_sum", "three_rows.csv", True),
    ("watchdog", "three_rows.csv", False),
]


def run_corpus(spec_name, trace_name, lax, **options):
    checked = check(spec_source(spec_name))
    inputs = {d.name: checked.values.streams[d.name] for d in checked.spec.inputs}
    monitor = new_monitor(checked, **options)
    with open(TRACES / trace_name, newline="") as f:
        for event in read_trace(f, inputs, strict=not lax):
            monitor.accept_event(event)
    monitor.finish()
    return checked, monitor


@pytest.fixture
def load():
    return lambda name: check(spec_source(name))

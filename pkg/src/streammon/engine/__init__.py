"""Stream interpreter: instances, scheduling, windows and verdicts."""

from .aggregation import aggregate_values, instance_aggregate, sliding_window
from .arith import RuntimeFault, format_value
from .monitor import (AvailabilityError, Event, EventError, InternalError, Monitor, MonitorError,
                      OutOfBufferError, TimeRegressionError, Verdict, new_monitor)

__all__ = [
    "Monitor", "new_monitor", "Event", "Verdict", "MonitorError", "TimeRegressionError",
    "EventError", "InternalError", "AvailabilityError", "OutOfBufferError", "RuntimeFault",
    "sliding_window", "instance_aggregate", "aggregate_values", "format_value",
]

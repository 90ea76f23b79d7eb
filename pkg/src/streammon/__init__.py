"""Stream-based runtime monitoring: specification checking and an interpreter."""

from .diagnostics import Diagnostic, SpecError
from .engine import Event, Monitor, Verdict, new_monitor
from .pipeline import CheckedSpec, check

__all__ = ["check", "CheckedSpec", "SpecError", "Diagnostic", "new_monitor", "Monitor", "Event", "Verdict"]

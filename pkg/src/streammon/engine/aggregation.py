"""Aggregation functions shared by sliding windows and instance aggregation."""

from __future__ import annotations

from collections import deque
from typing import Iterable, Optional

from .arith import check_range

NEUTRAL = {"count": 0, "exists": False, "forall": True}


def aggregate_values(fn: str, values: Iterable, zero=0, value_type=None):
    """Fold ``values`` with ``fn``; empty input gives the neutral element or None."""
    values = list(values)
    if fn == "count":
        return len(values)
    if fn == "exists":
        return any(values)
    if fn == "forall":
        return all(values)
    if fn == "sum":
        total = sum(values, zero)
        return check_range(total, value_type) if isinstance(total, int) and value_type is not None else total
    if not values:
        return None
    if fn == "avg":
        return sum(values) / len(values)
    if fn == "min":
        return min(values)
    if fn == "max":
        return max(values)
    raise ValueError(f"unknown aggregation function {fn!r}")


def prune(entries: deque, now: int, duration: int) -> None:
    """Drop entries outside the window (now - duration, now]."""
    horizon = now - duration
    while entries and entries[0][0] <= horizon:
        entries.popleft()


def sliding_window(entries: deque, now: int, duration: int, fn: str, exact: bool,
                   spawn_time: int, zero=0, value_type=None) -> Optional[object]:
    """Aggregate the (time, value) entries with time in (now - duration, now].

    ``entries`` must be in non-decreasing time order. With ``exact`` the
    result is None until a whole window has elapsed since ``spawn_time``.
    """
    prune(entries, now, duration)
    if exact and now - spawn_time < duration:
        return None
    return aggregate_values(fn, (v for t, v in entries if t <= now), zero, value_type)


def instance_aggregate(instances, fn: str, selection: str, cycle: int, zero=0, value_type=None):
    """Fold over the latest value of every live (``all``) or fresh (``fresh``) instance."""
    values = [inst.buffer[0] for inst in instances
              if inst.pushes and (selection == "all" or inst.fresh_cycle == cycle)]
    return aggregate_values(fn, values, zero, value_type)

"""The stream interpreter.

A monitor processes cycles. An event cycle carries fresh input values; a
deadline cycle runs the periodic clauses due at one instant. Within a cycle,
layers of the evaluation order are processed lowest first: the spawn clauses
of a layer's streams run, then their eval clauses. Close clauses run last and
removal happens after the cycle, so same-cycle reads still succeed.
"""

from __future__ import annotations

import heapq
import itertools
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional

from ..frontend import ast
from ..pipeline import CheckedSpec
from ..typecheck.pacing import TRUE, Event as EventPacing, Periodic, satisfied
from ..valuetypes import BOOL, FLOAT, INT, INT_MAX, INT_MIN, STRING, UINT, UINT_MAX
from . import arith
from .aggregation import instance_aggregate, prune, sliding_window
from .arith import RuntimeFault


class MonitorError(Exception):
    pass


class TimeRegressionError(MonitorError):
    pass


class EventError(MonitorError):
    """An event that does not fit the specification's inputs."""


class InternalError(MonitorError):
    """A broken engine invariant; indicates a checker or engine bug."""


class AvailabilityError(InternalError):
    pass


class OutOfBufferError(InternalError):
    pass


@dataclass(frozen=True)
class Event:
    time: int  # ns since monitor start
    values: Mapping[str, object] = field(default_factory=dict)


@dataclass(frozen=True)
class Verdict:
    time: int
    trigger: str
    params: tuple
    message: str
    kind: str = "trigger"  # trigger | error


class Instance:
    __slots__ = ("stream", "params", "uid", "buffer", "pushes", "spawn_time", "fresh_cycle",
                 "error_cycle", "windows", "subscriptions", "alive")

    def __init__(self, stream: "_Stream", params: tuple, uid: int, spawn_time: int):
        self.stream = stream
        self.params = params
        self.uid = uid
        self.buffer: deque = deque(maxlen=stream.bound + 1)
        self.pushes = 0
        self.spawn_time = spawn_time
        self.fresh_cycle = -1
        self.error_cycle = -1
        self.windows: dict[int, deque] = {}
        self.subscriptions: list[tuple[str, tuple, int]] = []
        self.alive = True

    @property
    def value(self):
        return self.buffer[0] if self.pushes else None

    def __repr__(self):
        return f"<{self.stream.name}{self.params or ''} #{self.uid}>"


class _Stream:
    def __init__(self, decl: ast.Declaration, index: int, layer: int, bound: int):
        self.decl = decl
        self.name = decl.name
        self.index = index
        self.layer = layer
        self.bound = bound
        self.pacing: dict[str, object] = {}
        self.code: dict[str, Optional[Callable]] = {}
        self.windows: list[tuple[int, ast.Window, Callable]] = []
        self.instances: dict[tuple, Instance] = {}

    @property
    def is_input(self) -> bool:
        return self.decl.kind == "input"

    @property
    def is_trigger(self) -> bool:
        return self.decl.kind == "trigger"


_KIND_ORDER = {"spawn": 0, "eval": 1, "close": 2}


class Monitor:
    def __init__(self, checked: CheckedSpec, start_time: int = 0, *, record: bool = False,
                 check_invariants: bool = False, bounds: Optional[Mapping[str, int]] = None,
                 observer: Optional[Callable] = None):
        self.checked = checked
        self.start = start_time
        self.now = start_time
        self.last_time = start_time
        self.cycle = 0
        self.cycle_kind = "event"
        self.fresh_inputs: frozenset = frozenset()
        self.due: set = set()
        self.record = record
        self.check_invariants = check_invariants
        self.observer = observer
        self.records: list[tuple[int, str, tuple, object]] = []
        self._cycle_records: list = []
        self._uids = itertools.count(1)
        self._seq = itertools.count()
        self._heap: list = []
        self._live: set[int] = set()
        self.subscribers: dict[str, dict[tuple, list[tuple[Instance, int]]]] = {}
        self.peak_buffer: dict[str, int] = {}
        spec = checked.spec
        bounds = dict(checked.bounds, **(bounds or {}))
        self.constants = {d.name: _literal_value(d.value) for d in spec.declarations if d.kind == "constant"}
        self.streams: dict[str, _Stream] = {}
        for i, d in enumerate(spec.streams):
            self.streams[d.name] = _Stream(d, i, checked.layer_of(d.name), bounds[d.name])
        self.inputs = [s for s in self.streams.values() if s.is_input]
        self.layers = [[self.streams[n] for n in layer if not self.streams[n].is_input]
                       for layer in checked.layers]
        self.outputs = [s for s in self.streams.values() if not s.is_input]
        self._by_index = list(self.streams.values())
        for s in self.streams.values():
            self.subscribers[s.name] = {}
            if s.is_input:
                s.pacing["eval"] = checked.pacing.eval(s.name)
                continue
            for label, clause in s.decl.clauses():
                s.pacing[label] = checked.pacing.get(s.name, label)
                s.code[label + "_when"] = self.compile(clause.when, s) if clause.when is not None else None
                s.code[label + "_with"] = self.compile(clause.with_, s) if clause.with_ is not None else None
        # Everything without a spawn clause exists from the start.
        for s in self.streams.values():
            if s.is_input or s.decl.spawn is None:
                self._create(s, (), start_time)
            elif isinstance(s.pacing["spawn"], Periodic):
                self._schedule(start_time + s.pacing["spawn"].period_ns, s, "spawn", -(s.index + 1))

    # compilation -------------------------------------------------------

    def type_of(self, e: ast.Expr):
        return self.checked.values.of(e)

    def compile(self, e: ast.Expr, owner: _Stream) -> Callable:
        """Translate an expression into a closure over the evaluating instance."""
        c = lambda sub: self.compile(sub, owner)  # noqa: E731
        if isinstance(e, ast.Literal):
            value = _literal_value(e)
            return lambda inst: value
        if isinstance(e, ast.ConstRef):
            value = self.constants[e.name]
            return lambda inst: value
        if isinstance(e, ast.ParamRef):
            i = e.index
            return lambda inst: inst.params[i]
        if isinstance(e, ast.StreamRef):
            return self._compile_sync(e, c)
        if isinstance(e, ast.Offset):
            return self._compile_offset(e, c)
        if isinstance(e, ast.Hold):
            target = self._instance_lookup(e.target, c)
            if e.default is None:
                return lambda inst: _held(target(inst))
            default = c(e.default)

            def hold_or(inst):
                v = _held(target(inst))
                return default(inst) if v is None else v
            return hold_or
        if isinstance(e, ast.Defaults):
            operand, default = c(e.operand), c(e.default)

            def defaults(inst):
                v = operand(inst)
                return default(inst) if v is None else v
            return defaults
        if isinstance(e, ast.Window):
            return self._compile_window(e, owner, c)
        if isinstance(e, ast.InstanceAgg):
            target = self.streams[e.target.name]
            t = self.type_of(e.target)
            zero = 0.0 if t == FLOAT else 0
            fn, selection = e.fn, e.selection
            return lambda inst: instance_aggregate(list(target.instances.values()), fn, selection,
                                                   self.cycle, zero, t)
        if isinstance(e, ast.Unary):
            operand = c(e.operand)
            if e.op == "!":
                return lambda inst: not operand(inst)
            if self.type_of(e) == FLOAT:
                return lambda inst: -operand(inst)
            t = self.type_of(e)
            return lambda inst: arith.check_range(-operand(inst), t)
        if isinstance(e, ast.Binary):
            return self._compile_binary(e, c)
        if isinstance(e, ast.FuncCall):
            args = [c(a) for a in e.args]
            if e.func in arith.MATH:
                f = arith.MATH[e.func]
                a0 = args[0]
                return lambda inst: f(a0(inst))
            t = self.type_of(e)
            if e.func == "abs":
                a0 = args[0]
                if t == FLOAT:
                    return lambda inst: abs(a0(inst))
                return lambda inst: arith.check_range(abs(a0(inst)), t)
            f = min if e.func == "min" else max
            a0, a1 = args
            return lambda inst: f(a0(inst), a1(inst))
        if isinstance(e, ast.TupleExpr):
            items = [c(i) for i in e.items]
            return lambda inst: tuple(f(inst) for f in items)
        if isinstance(e, ast.Project):
            operand, i = c(e.operand), e.index

            def project(inst):
                v = operand(inst)
                return None if v is None else v[i]
            return project
        if isinstance(e, ast.Format):
            args = [c(a) for a in e.args]
            template = e.template
            return lambda inst: arith.format_message(template, [a(inst) for a in args])
        raise InternalError(f"cannot compile {type(e).__name__}")

    def _instance_lookup(self, ref: ast.StreamRef, c) -> Callable:
        stream = self.streams[ref.name]
        args = [c(a) for a in ref.args]
        if not args:
            return lambda inst: stream.instances.get(())
        return lambda inst: stream.instances.get(tuple(a(inst) for a in args))

    def _compile_sync(self, ref: ast.StreamRef, c) -> Callable:
        lookup = self._instance_lookup(ref, c)
        name = ref.name

        def sync(inst):
            target = lookup(inst)
            if target is None:
                raise AvailabilityError(f"synchronous access to '{name}' found no live instance at t={self.now}")
            if target.error_cycle == self.cycle:
                raise RuntimeFault(f"'{target.stream.name}' failed in this cycle")
            if target.fresh_cycle != self.cycle:
                raise AvailabilityError(f"synchronous access to {target!r} which has no value at t={self.now}")
            return target.buffer[0]
        return sync

    def _compile_offset(self, e: ast.Offset, c) -> Callable:
        lookup = self._instance_lookup(e.target, c)
        n = -e.by

        def offset(inst):
            target = lookup(inst)
            if target is None:
                return None
            if target.error_cycle == self.cycle:
                raise RuntimeFault(f"'{target.stream.name}' failed in this cycle")
            idx = n if target.fresh_cycle == self.cycle else n - 1
            if idx < len(target.buffer):
                return target.buffer[idx]
            if idx < target.pushes:
                raise OutOfBufferError(f"{target!r} read {n} values back but keeps only {len(target.buffer)}")
            return None
        return offset

    def _compile_window(self, e: ast.Window, owner: _Stream, c) -> Callable:
        key = id(e)
        args = [c(a) for a in e.target.args]
        owner.windows.append((key, e, lambda inst: tuple(a(inst) for a in args)))
        duration, fn, exact = e.duration.ns, e.fn, e.exact
        t = self.type_of(e.target)
        zero = 0.0 if t == FLOAT else 0

        def window(inst):
            return sliding_window(inst.windows[key], self.now, duration, fn, exact, inst.spawn_time, zero, t)
        return window

    def _compile_binary(self, e: ast.Binary, c) -> Callable:
        left, right = c(e.left), c(e.right)
        op = e.op
        if op == "&&":
            return lambda inst: left(inst) and right(inst)
        if op == "||":
            return lambda inst: left(inst) or right(inst)
        if op in arith.COMPARE:
            f = arith.COMPARE[op]
        else:
            f = arith.binary_op(op, self.type_of(e.left))
        return lambda inst: f(left(inst), right(inst))

    # instances and scheduling -----------------------------------------

    def _schedule(self, time: int, stream: _Stream, kind: str, uid: int) -> None:
        heapq.heappush(self._heap, (time, stream.layer, stream.index, _KIND_ORDER[kind], next(self._seq), kind, uid))

    def _create(self, stream: _Stream, params: tuple, time: int) -> Instance:
        inst = Instance(stream, params, next(self._uids), time)
        stream.instances[params] = inst
        self._live.add(inst.uid)
        for label in ("eval", "close"):
            p = stream.pacing.get(label)
            if isinstance(p, Periodic):
                anchor = time if p.anchor == "spawn" else self.start
                first = anchor + p.period_ns * ((time - anchor) // p.period_ns + 1)
                self._schedule(first, stream, label, inst.uid)
        for key, node, args in stream.windows:
            target = node.target.name
            target_params = args(inst)
            inst.windows[key] = deque()
            self.subscribers[target].setdefault(target_params, []).append((inst, key))
            inst.subscriptions.append((target, target_params, key))
            # A target value committed earlier in this cycle still belongs to the window.
            source = self.streams[target].instances.get(target_params)
            if source is not None and source.fresh_cycle == self.cycle and source.pushes:
                inst.windows[key].append((self.now, source.buffer[0]))
        return inst

    def _close(self, inst: Instance) -> None:
        inst.alive = False
        self._live.discard(inst.uid)
        stream = inst.stream
        if stream.instances.get(inst.params) is inst:
            del stream.instances[inst.params]
        for target, params, key in inst.subscriptions:
            subs = self.subscribers[target].get(params, [])
            subs[:] = [(i, k) for i, k in subs if i is not inst]
            if not subs:
                self.subscribers[target].pop(params, None)

    def _commit(self, inst: Instance, value) -> None:
        inst.buffer.appendleft(value)
        inst.pushes += 1
        inst.fresh_cycle = self.cycle
        for sub, key in self.subscribers[inst.stream.name].get(inst.params, ()):
            sub.windows[key].append((self.now, value))
        if self.record and not inst.stream.is_input:
            self._cycle_records.append((self.now, inst.stream.name, inst.params, value))

    def _due(self, stream: _Stream, label: str, uid: int) -> bool:
        p = stream.pacing[label]
        if isinstance(p, EventPacing):
            if self.cycle_kind == "event":
                return satisfied(p.formula, self.fresh_inputs)
            return p.formula == TRUE
        return self.cycle_kind == "deadline" and (label, uid) in self.due

    @property
    def next_deadline(self) -> Optional[int]:
        while self._heap:
            time, *_, kind, uid = self._heap[0]
            if uid < 0 or uid in self._live:
                return time
            heapq.heappop(self._heap)
        return None

    # cycles ------------------------------------------------------------

    def run_cycle(self, time: int, values: Optional[Mapping[str, object]] = None,
                  due: Optional[set] = None) -> list[Verdict]:
        """Run one event cycle (``values`` given) or one deadline cycle (``due`` given)."""
        self.cycle += 1
        self.now = time
        self.cycle_kind = "deadline" if values is None else "event"
        self.fresh_inputs = frozenset(values or ())
        self.due = due or set()
        self._cycle_records = []
        verdicts: list[Verdict] = []
        if values is not None:
            for s in self.inputs:
                if s.name in values:
                    self._commit(s.instances[()], values[s.name])
        for layer in self.layers:
            for s in layer:
                if s.decl.spawn is not None and self._due(s, "spawn", -(s.index + 1)):
                    self._spawn(s, verdicts)
            for s in layer:
                for inst in list(s.instances.values()):
                    if self._due(s, "eval", inst.uid):
                        self._evaluate(inst, verdicts)
        closing = []
        for s in self.outputs:
            if s.decl.close is None:
                continue
            for inst in list(s.instances.values()):
                if not self._due(s, "close", inst.uid):
                    continue
                when = s.code["close_when"]
                try:
                    if when is None or when(inst):
                        closing.append(inst)
                except RuntimeFault as fault:
                    verdicts.append(Verdict(time, s.name, inst.params, f"close failed: {fault}", "error"))
        for inst in closing:
            self._close(inst)
        self._end_cycle()
        if self.observer is not None:
            self.observer(self, verdicts)
        return verdicts

    def _spawn(self, s: _Stream, verdicts: list) -> None:
        when, with_ = s.code["spawn_when"], s.code["spawn_with"]
        try:
            if when is not None and not when(None):
                return
            if with_ is None:
                params = ()
            else:
                params = with_(None)
                if len(s.decl.params) == 1:
                    params = (params,)
        except RuntimeFault as fault:
            verdicts.append(Verdict(self.now, s.name, (), f"spawn failed: {fault}", "error"))
            return
        if params not in s.instances:
            self._create(s, params, self.now)

    def _evaluate(self, inst: Instance, verdicts: list) -> None:
        s = inst.stream
        when, with_ = s.code["eval_when"], s.code["eval_with"]
        try:
            if when is not None and not when(inst):
                if self.record and s.is_trigger:
                    self._cycle_records.append((self.now, s.name, inst.params, False))
                return
            value = with_(inst)
        except RuntimeFault as fault:
            inst.error_cycle = self.cycle
            verdicts.append(Verdict(self.now, s.name, inst.params, str(fault), "error"))
            return
        if s.is_trigger:
            verdicts.append(Verdict(self.now, s.name, inst.params, value))
            value = True
        self._commit(inst, value)

    def _end_cycle(self) -> None:
        for s in self.outputs:
            for inst in s.instances.values():
                for key, node, _ in s.windows:
                    prune(inst.windows[key], self.now, node.duration.ns)
        if self.check_invariants:
            self.assert_invariants()
        for s in self.streams.values():
            for inst in s.instances.values():
                if len(inst.buffer) > self.peak_buffer.get(s.name, 0):
                    self.peak_buffer[s.name] = len(inst.buffer)
        if self.record:
            self.records.extend(self._cycle_records)

    def assert_invariants(self) -> None:
        for s in self.streams.values():
            for inst in s.instances.values():
                if len(inst.buffer) > s.bound + 1:
                    raise InternalError(f"{inst!r} retains {len(inst.buffer)} values, bound is {s.bound}")
                for key, node, _ in s.windows:
                    entries = inst.windows[key]
                    if entries and entries[0][0] <= self.now - node.duration.ns:
                        raise InternalError(f"{inst!r} window keeps an entry older than its horizon")
                    if any(a[0] > b[0] for a, b in zip(entries, itertools.islice(entries, 1, None))):
                        raise InternalError(f"{inst!r} window is out of time order")

    # driving -----------------------------------------------------------

    def _run_deadlines(self, limit: int, inclusive: bool) -> list[Verdict]:
        verdicts: list[Verdict] = []
        while True:
            nxt = self.next_deadline
            if nxt is None or nxt > limit or (nxt == limit and not inclusive):
                return verdicts
            due = set()
            reschedule = []
            while self._heap and self._heap[0][0] == nxt:
                entry = heapq.heappop(self._heap)
                kind, uid = entry[-2], entry[-1]
                if uid >= 0 and uid not in self._live:
                    continue
                due.add((kind, uid))
                reschedule.append(entry)
            verdicts.extend(self.run_cycle(nxt, due=due))
            for time, layer, index, order, _, kind, uid in reschedule:
                stream = self._by_index[index]
                if uid < 0 or uid in self._live:
                    period = stream.pacing[kind].period_ns
                    heapq.heappush(self._heap, (time + period, layer, index, order, next(self._seq), kind, uid))

    def _check_time(self, time: int) -> None:
        if time < self.last_time:
            raise TimeRegressionError(f"time {time} ns is before the last processed time {self.last_time} ns")

    def accept_event(self, event: Event) -> list[Verdict]:
        """Process deadlines before ``event.time``, the event cycle, then deadlines at ``event.time``."""
        self._check_time(event.time)
        values = self._validate(event.values)
        verdicts = self._run_deadlines(event.time, inclusive=False)
        verdicts.extend(self.run_cycle(event.time, values=values))
        verdicts.extend(self._run_deadlines(event.time, inclusive=True))
        self.last_time = event.time
        return verdicts

    def advance_time(self, now: int) -> list[Verdict]:
        """Run every deadline up to and including ``now`` without consuming input."""
        self._check_time(now)
        verdicts = self._run_deadlines(now, inclusive=True)
        self.last_time = now
        return verdicts

    def finish(self) -> list[Verdict]:
        """Flush deadlines up to the last processed time."""
        return self._run_deadlines(self.last_time, inclusive=True)

    def _validate(self, values: Mapping[str, object]) -> dict:
        if not values:
            raise EventError("event carries no input value")
        out = {}
        for name, v in values.items():
            s = self.streams.get(name)
            if s is None or not s.is_input:
                raise EventError(f"'{name}' is not an input stream")
            out[name] = check_input_value(name, self.checked.values.streams[name], v)
        return out

    # inspection --------------------------------------------------------

    def instances(self, stream: str) -> dict[tuple, Instance]:
        return dict(self.streams[stream].instances)

    def value(self, stream: str, params: tuple = ()):
        inst = self.streams[stream].instances.get(params)
        return None if inst is None else inst.value


def check_input_value(name: str, t, v):
    if t == BOOL:
        ok = isinstance(v, bool)
    elif t == INT:
        ok = isinstance(v, int) and not isinstance(v, bool) and INT_MIN <= v <= INT_MAX
    elif t == UINT:
        ok = isinstance(v, int) and not isinstance(v, bool) and 0 <= v <= UINT_MAX
    elif t == FLOAT:
        ok = isinstance(v, (int, float)) and not isinstance(v, bool)
        v = float(v) if ok else v
    elif t == STRING:
        ok = isinstance(v, str)
    else:
        ok = isinstance(v, tuple)
    if not ok:
        raise EventError(f"value {v!r} does not fit input '{name}' of type {t}")
    return v


def _held(inst: Optional[Instance]):
    return None if inst is None else inst.value


def _literal_value(e: ast.Expr):
    if isinstance(e, ast.Unary):
        return -_literal_value(e.operand)
    return e.value


def new_monitor(checked: CheckedSpec, start_time: int = 0, **options) -> Monitor:
    return Monitor(checked, start_time, **options)

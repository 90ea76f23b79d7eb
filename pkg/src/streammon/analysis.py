"""Dependency graph, well-formedness, memory bounds and evaluation order."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional

from .diagnostics import NO_SPAN, DiagnosticBag, Span
from .frontend import ast

# Edge kinds that order evaluation inside a single cycle.
ORDERING_KINDS = ("sync", "spawn-access")


@dataclass(frozen=True)
class Access:
    """One stream access found in a clause of ``source``."""

    source: str
    target: str
    kind: str  # sync | offset | hold | window | instance-agg
    weight: int
    clause: str  # spawn | eval | close
    node: ast.Expr

    @property
    def span(self) -> Span:
        return self.node.span


def clause_accesses(decl: ast.Declaration, label: str, clause: ast.Clause) -> Iterator[Access]:
    for root in (clause.when, clause.with_):
        if root is not None:
            yield from _accesses(decl.name, label, root)


def stream_accesses(decl: ast.Declaration) -> Iterator[Access]:
    for label, clause in decl.clauses():
        yield from clause_accesses(decl, label, clause)


def _accesses(source: str, clause: str, e: ast.Expr) -> Iterator[Access]:
    def target_args(ref):
        for a in getattr(ref, "args", ()):
            yield from _accesses(source, clause, a)

    if isinstance(e, ast.StreamRef):
        yield Access(source, e.name, "sync", 0, clause, e)
        yield from target_args(e)
        return
    if isinstance(e, ast.Offset) and isinstance(e.target, ast.StreamRef):
        yield Access(source, e.target.name, "offset", e.by, clause, e)
        yield from target_args(e.target)
        return
    if isinstance(e, ast.Hold) and isinstance(e.target, ast.StreamRef):
        yield Access(source, e.target.name, "hold", 0, clause, e)
        yield from target_args(e.target)
        if e.default is not None:
            yield from _accesses(source, clause, e.default)
        return
    if isinstance(e, ast.Window) and isinstance(e.target, ast.StreamRef):
        yield Access(source, e.target.name, "window", 0, clause, e)
        yield from target_args(e.target)
        return
    if isinstance(e, ast.InstanceAgg) and isinstance(e.target, ast.StreamRef):
        yield Access(source, e.target.name, "instance-agg", 0, clause, e)
        return
    for child in e.children():
        yield from _accesses(source, clause, child)


@dataclass(frozen=True)
class Edge:
    src: str
    dst: str
    weight: int
    kind: str


def _edge_kind(access: Access) -> str:
    kind = access.kind
    # Aggregating over the instances evaluated in this cycle is a same-cycle read.
    if kind == "instance-agg" and access.node.selection == "fresh":
        kind = "sync"
    if kind == "sync" and access.clause == "spawn":
        return "spawn-access"
    if kind == "sync" and access.clause == "close":
        return "close-access"
    return kind


@dataclass
class DependencyGraph:
    nodes: list[str]
    edges: list[Edge] = field(default_factory=list)
    spans: dict[Edge, Span] = field(default_factory=dict, compare=False, repr=False)

    def outgoing(self, node: str) -> list[Edge]:
        return [e for e in self.edges if e.src == node]

    def incoming(self, node: str) -> list[Edge]:
        return [e for e in self.edges if e.dst == node]

    def edge_set(self) -> set[tuple[str, str, int]]:
        return {(e.src, e.dst, e.weight) for e in self.edges}

    def to_dot(self) -> str:
        lines = ["digraph dependencies {"]
        for n in self.nodes:
            lines.append(f'  "{n}";')
        for e in self.edges:
            style = "" if e.kind in ORDERING_KINDS or e.kind == "offset" else ", style=dashed"
            lines.append(f'  "{e.src}" -> "{e.dst}" [label="{e.weight} {e.kind}"{style}];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def build_dependency_graph(spec: ast.Specification) -> DependencyGraph:
    """One node per stream; one edge per distinct (source, target, weight, kind) access."""
    graph = DependencyGraph([d.name for d in spec.streams])
    seen = set()
    for decl in spec.streams:
        for access in stream_accesses(decl):
            edge = Edge(access.source, access.target, access.weight, _edge_kind(access))
            if edge not in seen:
                seen.add(edge)
                graph.edges.append(edge)
                graph.spans[edge] = access.span
    return graph


def _zero_weight_successors(graph: DependencyGraph) -> dict[str, list[str]]:
    succ: dict[str, list[str]] = {n: [] for n in graph.nodes}
    for e in graph.edges:
        if e.kind in ORDERING_KINDS and e.dst not in succ[e.src]:
            succ[e.src].append(e.dst)
    return succ


def find_zero_weight_cycle(graph: DependencyGraph) -> Optional[list[str]]:
    """Return the streams of some cycle made of weight-0 ordering edges, or None."""
    succ = _zero_weight_successors(graph)
    state = {n: 0 for n in graph.nodes}  # 0 new, 1 on stack, 2 done
    for root in graph.nodes:
        if state[root]:
            continue
        path = [root]
        iters = [iter(succ[root])]
        state[root] = 1
        while iters:
            nxt = next(iters[-1], None)
            if nxt is None:
                state[path.pop()] = 2
                iters.pop()
                continue
            if state[nxt] == 1:
                return path[path.index(nxt):]
            if state[nxt] == 0:
                state[nxt] = 1
                path.append(nxt)
                iters.append(iter(succ[nxt]))
    return None


def check_well_formed(graph: DependencyGraph) -> None:
    """Reject graphs with a cycle whose accumulated weight is zero.

    Offset edges carry negative weights, so a zero-weight cycle consists only
    of same-cycle accesses. Hold, window, instance-aggregation and close-clause
    accesses read committed state and never close such a cycle.
    """
    cycle = find_zero_weight_cycle(graph)
    if cycle is None:
        return
    bag = DiagnosticBag()
    span = next((graph.spans.get(e, NO_SPAN) for e in graph.edges
                 if e.src == cycle[0] and e.kind in ORDERING_KINDS and e.dst in cycle), NO_SPAN)
    shown = " -> ".join(cycle + [cycle[0]])
    bag.error("cycle", f"dependency cycle {shown}: accumulated edge weight is 0 but must be not zero; "
              "no stream on it can be evaluated first", span)
    bag.raise_if_any()


def check_self_defaults(spec: ast.Specification) -> None:
    """Reject ``x.offset(by: -n).defaults(to: x)`` inside the definition of ``x``.

    The default would read the value that is being computed.
    """
    bag = DiagnosticBag()
    for decl in spec.outputs:
        for _, clause in decl.clauses():
            for root in (clause.when, clause.with_):
                if root is None:
                    continue
                for node in ast.walk(root):
                    if (isinstance(node, ast.Defaults) and isinstance(node.operand, ast.Offset)
                            and isinstance(node.operand.target, ast.StreamRef)
                            and node.operand.target.name == decl.name
                            and any(isinstance(n, ast.StreamRef) and n.name == decl.name
                                    for n in ast.walk(node.default))):
                        bag.error("self-default",
                                  f"default of '{decl.name}.offset(...)' reads '{decl.name}' itself in the same cycle",
                                  node.default.span)
    bag.raise_if_any()


def compute_memory_bounds(graph: DependencyGraph) -> dict[str, int]:
    bounds = {n: 0 for n in graph.nodes}
    for e in graph.edges:
        if e.kind == "offset":
            bounds[e.dst] = max(bounds[e.dst], -e.weight)
    return bounds


def compute_evaluation_order(graph: DependencyGraph) -> list[list[str]]:
    """Layered topological order over same-cycle edges; accessed streams come first.

    Within a layer, streams keep declaration order.
    """
    succ = _zero_weight_successors(graph)
    layer: dict[str, int] = {}

    def depth(n, stack=()):
        if n in layer:
            return layer[n]
        if n in stack:
            raise ValueError(f"cycle through {n}")
        targets = [t for t in succ[n] if t != n]
        layer[n] = 1 + max((depth(t, stack + (n,)) for t in targets), default=-1)
        return layer[n]

    for n in graph.nodes:
        depth(n)
    count = max(layer.values(), default=-1) + 1
    return [[n for n in graph.nodes if layer[n] == i] for i in range(count)]

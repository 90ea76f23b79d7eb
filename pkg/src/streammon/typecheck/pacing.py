"""Pacing types: when a clause can run.

An event pacing is a positive boolean formula over input names, kept in
disjunctive normal form as a set of conjunctions (frozensets of names) with
subsumed conjunctions removed. The empty conjunction is ``true``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

from ..analysis import Access, clause_accesses
from ..diagnostics import DiagnosticBag
from ..frontend import ast

Formula = frozenset  # frozenset[frozenset[str]]

TRUE: Formula = frozenset({frozenset()})


def var(name: str) -> Formula:
    return frozenset({frozenset({name})})


def _minimize(conjuncts) -> Formula:
    cs = set(conjuncts)
    return frozenset(c for c in cs if not any(o < c for o in cs))


def f_or(a: Formula, b: Formula) -> Formula:
    return _minimize(a | b)


def f_and(a: Formula, b: Formula) -> Formula:
    return _minimize(x | y for x in a for y in b)


def entails(lhs: Formula, rhs: Formula) -> bool:
    """Decide whether ``lhs -> rhs`` is a tautology for positive formulas.

    The conjunctions of ``lhs`` are its minimal models; a monotone ``rhs``
    holds in all models of ``lhs`` iff it holds in each minimal one.
    """
    return all(any(d <= c for d in rhs) for c in lhs)


def satisfied(f: Formula, true_vars) -> bool:
    return any(c <= true_vars for c in f)


def format_formula(f: Formula) -> str:
    if f == TRUE:
        return "true"
    parts = []
    for c in sorted(f, key=lambda c: (len(c), sorted(c))):
        names = sorted(c)
        text = " && ".join(names)
        parts.append(f"({text})" if len(names) > 1 and len(f) > 1 else text)
    return " || ".join(parts)


@dataclass(frozen=True)
class Event:
    formula: Formula

    def __str__(self) -> str:
        return f"@{format_formula(self.formula)}@"


@dataclass(frozen=True)
class Periodic:
    period_ns: int
    anchor: str  # global | spawn

    def __str__(self) -> str:
        text = _format_period(self.period_ns)
        return f"@{text}@" if self.anchor == "global" else f"@{text} after spawn@"


PacingType = Union[Event, Periodic]


def _format_period(ns: int) -> str:
    for unit, size in (("h", 3600 * 10**9), ("min", 60 * 10**9), ("s", 10**9), ("ms", 10**6), ("us", 10**3)):
        if ns % size == 0:
            return f"{ns // size}{unit}"
    return f"{ns}ns"


def pacing_from_annotation(p: ast.PacingExpr, anchor: str) -> PacingType:
    if isinstance(p, ast.PFrequency):
        return Periodic(p.period_ns, anchor)
    return Event(_formula(p))


def _formula(p: ast.PacingExpr) -> Formula:
    if isinstance(p, ast.PTrue):
        return TRUE
    if isinstance(p, ast.PVar):
        return var(p.name)
    if isinstance(p, ast.PAnd):
        return f_and(_formula(p.left), _formula(p.right))
    return f_or(_formula(p.left), _formula(p.right))


# Access kinds whose target must have a value in the same cycle.
SYNC_KINDS = ("sync", "offset")


def _pacing_relevant(access: Access, spec: ast.Specification) -> bool:
    if access.kind in SYNC_KINDS:
        return True
    # Fresh instance aggregation couples the caller to the target's eval pacing.
    return access.kind == "instance-agg" and access.node.selection == "fresh"


@dataclass
class PacingTypes:
    clauses: dict[tuple[str, str], PacingType]  # (stream, clause label) -> pacing

    def eval(self, stream: str) -> PacingType:
        return self.clauses[(stream, "eval")]

    def get(self, stream: str, label: str) -> Optional[PacingType]:
        return self.clauses.get((stream, label))


def infer_pacing_types(spec: ast.Specification) -> PacingTypes:
    """Assign a pacing type to every clause of every stream.

    Annotated clauses take their annotation. Unannotated ones get the
    conjunction of the eval pacings of the streams they access synchronously
    or by offset; periodic operands combine to the lcm of their periods.
    Inputs have ``Event(self)``.
    """
    bag = DiagnosticBag()
    result: dict[tuple[str, str], PacingType] = {}
    in_progress: set[tuple[str, str]] = set()

    def anchor_of(decl, label):
        return "spawn" if decl.spawn is not None and label != "spawn" else "global"

    def clause_pacing(decl: ast.Declaration, label: str) -> Optional[PacingType]:
        key = (decl.name, label)
        if key in result:
            return result[key]
        if decl.kind == "input":
            result[key] = Event(var(decl.name))
            return result[key]
        clause = getattr(decl, label)
        if clause.pacing is not None:
            result[key] = pacing_from_annotation(clause.pacing, anchor_of(decl, label))
            return result[key]
        if key in in_progress:
            return None
        in_progress.add(key)
        operands: list[PacingType] = []
        for access in clause_accesses(decl, label, clause):
            if not _pacing_relevant(access, spec):
                continue
            if access.target == decl.name and label == "eval":
                continue
            target = spec.get(access.target)
            p = clause_pacing(target, "eval")
            if p is not None:
                operands.append(p)
        in_progress.discard(key)
        span = clause.span if clause.span.end else decl.span
        if not operands:
            bag.error("pacing-underdetermined",
                      f"cannot infer when the {label} clause of '{decl.name}' runs: it reads no stream synchronously; add an @...@ annotation",
                      span)
            return None
        events = [p for p in operands if isinstance(p, Event)]
        periodics = [p for p in operands if isinstance(p, Periodic)]
        if events and periodics:
            bag.error("pacing-mix",
                      f"the {label} clause of '{decl.name}' reads both event-based and periodic streams synchronously",
                      span)
            return None
        if events:
            formula = TRUE
            for p in events:
                formula = f_and(formula, p.formula)
            result[key] = Event(formula)
        else:
            result[key] = Periodic(math.lcm(*(p.period_ns for p in periodics)), anchor_of(decl, label))
        return result[key]

    for decl in spec.streams:
        if decl.kind == "input":
            clause_pacing(decl, "eval")
            continue
        for label, _ in decl.clauses():
            clause_pacing(decl, label)
    bag.raise_if_any()
    return PacingTypes(result)


def access_compatible(accessor: PacingType, accessed: PacingType) -> Optional[str]:
    """Return None if ``accessed`` runs at every instant ``accessor`` does, else a reason."""
    if isinstance(accessor, Event) and isinstance(accessed, Event):
        if entails(accessor.formula, accessed.formula):
            return None
        return f"{accessor} does not imply {accessed}"
    if isinstance(accessor, Periodic) and isinstance(accessed, Periodic):
        if accessor.anchor != accessed.anchor:
            return f"{accessor} and {accessed} are anchored differently"
        if accessor.period_ns % accessed.period_ns:
            return f"{accessed} is not evaluated at every instant of {accessor}"
        return None
    return f"synchronous access between {accessor} and {accessed} mixes event-based and periodic timing"


def check_pacing_access(spec: ast.Specification, pacing: PacingTypes) -> None:
    """Every sync/offset access must target a stream evaluated whenever the accessing clause runs."""
    bag = DiagnosticBag()
    for decl in spec.outputs:
        for label, clause in decl.clauses():
            mine = pacing.get(decl.name, label)
            for access in clause_accesses(decl, label, clause):
                if access.kind not in SYNC_KINDS:
                    continue
                if access.target == decl.name and label == "eval":
                    continue
                theirs = pacing.eval(access.target)
                reason = access_compatible(mine, theirs)
                if reason is not None:
                    bag.error("pacing",
                              f"'{decl.name}' ({label}) accesses '{access.target}' synchronously but {reason}",
                              access.span)
    bag.raise_if_any()

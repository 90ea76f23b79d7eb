"""Syntax tree for specifications.

Nodes compare structurally; source spans are carried along but ignored by
equality so that a pretty-printed and re-parsed tree equals the original.
Parse-level names (:class:`Name`, :class:`Call`) are replaced by the resolver
with :class:`StreamRef`, :class:`ParamRef`, :class:`ConstRef` and
:class:`FuncCall`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional

from ..diagnostics import NO_SPAN, Span
from ..valuetypes import ValueType


def _span():
    return field(default=NO_SPAN, compare=False, repr=False, kw_only=True)


class Expr:
    span: Span

    def children(self) -> Iterator["Expr"]:
        return iter(())


@dataclass(frozen=True)
class Literal(Expr):
    value: object
    kind: str  # int | float | bool | str
    span: Span = _span()


@dataclass(frozen=True)
class Name(Expr):
    ident: str
    span: Span = _span()


@dataclass(frozen=True)
class Call(Expr):
    func: str
    args: tuple[Expr, ...]
    span: Span = _span()

    def children(self):
        return iter(self.args)


@dataclass(frozen=True)
class StreamRef(Expr):
    """Current-value access to a stream; ``args`` selects a parameterized instance."""

    name: str
    args: tuple[Expr, ...] = ()
    span: Span = _span()

    def children(self):
        return iter(self.args)


@dataclass(frozen=True)
class ParamRef(Expr):
    name: str
    index: int
    span: Span = _span()


@dataclass(frozen=True)
class ConstRef(Expr):
    name: str
    span: Span = _span()


@dataclass(frozen=True)
class FuncCall(Expr):
    func: str
    args: tuple[Expr, ...]
    span: Span = _span()

    def children(self):
        return iter(self.args)


@dataclass(frozen=True)
class Unary(Expr):
    op: str  # "-" | "!"
    operand: Expr
    span: Span = _span()

    def children(self):
        yield self.operand


@dataclass(frozen=True)
class Binary(Expr):
    op: str
    left: Expr
    right: Expr
    span: Span = _span()

    def children(self):
        yield self.left
        yield self.right


@dataclass(frozen=True)
class Offset(Expr):
    target: Expr
    by: int  # strictly negative
    span: Span = _span()

    def children(self):
        yield self.target


@dataclass(frozen=True)
class Defaults(Expr):
    operand: Expr
    default: Expr
    span: Span = _span()

    def children(self):
        yield self.operand
        yield self.default


@dataclass(frozen=True)
class Hold(Expr):
    target: Expr
    default: Optional[Expr] = None
    span: Span = _span()

    def children(self):
        yield self.target
        if self.default is not None:
            yield self.default


@dataclass(frozen=True)
class Duration:
    ns: int
    text: str = field(default="", compare=False)

    def __str__(self) -> str:
        return self.text or f"{self.ns}ns"


@dataclass(frozen=True)
class Window(Expr):
    target: Expr
    duration: Duration
    fn: str
    exact: bool
    span: Span = _span()

    def children(self):
        yield self.target


@dataclass(frozen=True)
class InstanceAgg(Expr):
    target: Expr
    selection: str  # all | fresh
    fn: str
    span: Span = _span()

    def children(self):
        yield self.target


@dataclass(frozen=True)
class TupleExpr(Expr):
    items: tuple[Expr, ...]
    span: Span = _span()

    def children(self):
        return iter(self.items)


@dataclass(frozen=True)
class Project(Expr):
    operand: Expr
    index: int
    span: Span = _span()

    def children(self):
        yield self.operand


@dataclass(frozen=True)
class Format(Expr):
    template: str
    args: tuple[Expr, ...]
    span: Span = _span()

    def children(self):
        return iter(self.args)


def walk(expr: Expr) -> Iterator[Expr]:
    yield expr
    for child in expr.children():
        yield from walk(child)


# Pacing annotations ------------------------------------------------------

class PacingExpr:
    span: Span


@dataclass(frozen=True)
class PVar(PacingExpr):
    name: str
    span: Span = _span()


@dataclass(frozen=True)
class PTrue(PacingExpr):
    span: Span = _span()


@dataclass(frozen=True)
class PAnd(PacingExpr):
    left: PacingExpr
    right: PacingExpr
    span: Span = _span()


@dataclass(frozen=True)
class POr(PacingExpr):
    left: PacingExpr
    right: PacingExpr
    span: Span = _span()


@dataclass(frozen=True)
class PFrequency(PacingExpr):
    period_ns: int
    text: str = field(default="", compare=False)
    span: Span = _span()


# Declarations ------------------------------------------------------------

@dataclass(frozen=True)
class Clause:
    pacing: Optional[PacingExpr] = None
    when: Optional[Expr] = None
    with_: Optional[Expr] = None
    span: Span = _span()


@dataclass(frozen=True)
class Declaration:
    kind: str  # input | constant | output | trigger
    name: str
    params: tuple[str, ...] = ()
    annotation: Optional[ValueType] = None
    spawn: Optional[Clause] = None
    eval: Optional[Clause] = None
    close: Optional[Clause] = None
    value: Optional[Expr] = None
    span: Span = _span()

    @property
    def is_stream(self) -> bool:
        return self.kind != "constant"

    def clauses(self) -> Iterator[tuple[str, Clause]]:
        for label in ("spawn", "eval", "close"):
            clause = getattr(self, label)
            if clause is not None:
                yield label, clause


@dataclass(frozen=True)
class Specification:
    imports: tuple[str, ...] = ()
    declarations: tuple[Declaration, ...] = ()

    def get(self, name: str) -> Optional[Declaration]:
        for decl in self.declarations:
            if decl.name == name:
                return decl
        return None

    @property
    def inputs(self) -> list[Declaration]:
        return [d for d in self.declarations if d.kind == "input"]

    @property
    def outputs(self) -> list[Declaration]:
        return [d for d in self.declarations if d.kind in ("output", "trigger")]

    @property
    def streams(self) -> list[Declaration]:
        return [d for d in self.declarations if d.is_stream]

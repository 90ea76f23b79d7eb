"""Value-type inference by unification.

Integer literals start as variables restricted to Int/UInt and default to Int.
Tuple projections are solved lazily once the operand type is known, since the
operand may be a stream declared further down.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..diagnostics import DiagnosticBag, Span, SpecError, error
from ..frontend import ast
from ..valuetypes import (BOOL, FLOAT, INT, NUMERIC, STRING, UINT, OptionalType, Prim, TupleType,
                          ValueType, optional)

PARAMETER_TYPES = (INT, UINT, BOOL, STRING)


class TVar:
    __slots__ = ("parent", "bound", "int_literal", "id")
    _next = 0

    def __init__(self, int_literal: bool = False):
        self.parent = None
        self.bound = None
        self.int_literal = int_literal
        TVar._next += 1
        self.id = TVar._next

    def __repr__(self):
        return f"?{self.id}"


class _Mismatch(Exception):
    pass


@dataclass
class ValueTypes:
    streams: dict[str, ValueType]
    params: dict[str, tuple[ValueType, ...]]
    exprs: dict[int, ValueType] = field(repr=False)

    def of(self, expr: ast.Expr) -> ValueType:
        return self.exprs[id(expr)]


def _find(t):
    while isinstance(t, TVar) and t.parent is not None:
        t = t.parent
    if isinstance(t, TVar) and t.bound is not None:
        return t.bound
    return t


def _root(v: TVar) -> TVar:
    while v.parent is not None:
        v = v.parent
    return v


class _Solver:
    def __init__(self, spec: ast.Specification, bag: DiagnosticBag):
        self.spec = spec
        self.bag = bag
        self.exprs: dict[int, object] = {}
        self.stream_vars: dict[str, object] = {}
        self.param_vars: dict[str, list[TVar]] = {}
        self.projections: list[tuple[object, int, TVar, Span]] = []
        self.numeric: list[tuple[object, Span, str]] = []
        self.signed: list[tuple[object, Span]] = []

    # unification -------------------------------------------------------

    def resolve(self, t):
        t = _find(t)
        if isinstance(t, TVar):
            return _root(t)
        return t

    def unify(self, a, b):
        a, b = self.resolve(a), self.resolve(b)
        if a is b:
            return
        if isinstance(a, TVar) and isinstance(b, TVar):
            b.int_literal = b.int_literal or a.int_literal
            a.parent = b
            return
        if isinstance(b, TVar):
            a, b = b, a
        if isinstance(a, TVar):
            if a.int_literal and b not in (INT, UINT):
                raise _Mismatch(f"integer literal used as {self.show(b)}")
            if self.occurs(a, b):
                raise _Mismatch("recursive type")
            a.bound = b
            return
        if isinstance(a, Prim) and isinstance(b, Prim):
            if a != b:
                raise _Mismatch(f"{a} vs {b}")
            return
        if isinstance(a, TupleType) and isinstance(b, TupleType) and len(a.items) == len(b.items):
            for x, y in zip(a.items, b.items):
                self.unify(x, y)
            return
        if isinstance(a, OptionalType) and isinstance(b, OptionalType):
            self.unify(a.inner, b.inner)
            return
        raise _Mismatch(f"{self.show(a)} vs {self.show(b)}")

    def occurs(self, v, t) -> bool:
        t = self.resolve(t)
        if t is v:
            return True
        if isinstance(t, TupleType):
            return any(self.occurs(v, i) for i in t.items)
        if isinstance(t, OptionalType):
            return self.occurs(v, t.inner)
        return False

    def zonk(self, t):
        t = self.resolve(t)
        if isinstance(t, TupleType):
            return TupleType(tuple(self.zonk(i) for i in t.items))
        if isinstance(t, OptionalType):
            return optional(self.zonk(t.inner))
        return t

    def show(self, t) -> str:
        t = self.zonk(t)
        if isinstance(t, TVar):
            return "integer" if t.int_literal else "unknown"
        return str(t)

    def expect(self, got, want, span: Span, what: str) -> bool:
        try:
            self.unify(got, want)
        except _Mismatch:
            self.bag.error("type", f"{what}: expected {self.show(want)}, found {self.show(got)}", span)
            return False
        return True

    def opt(self, t):
        t = self.resolve(t)
        return t if isinstance(t, OptionalType) else OptionalType(t)

    # declarations ------------------------------------------------------

    def run(self) -> ValueTypes:
        for d in self.spec.declarations:
            if d.kind in ("input", "constant"):
                self.stream_vars[d.name] = d.annotation
            elif d.kind == "trigger":
                self.stream_vars[d.name] = BOOL
            else:
                self.stream_vars[d.name] = d.annotation if d.annotation is not None else TVar()
            self.param_vars[d.name] = [TVar() for _ in d.params]
        for d in self.spec.declarations:
            if d.kind == "constant":
                self.expect(self.infer(d.value, d), d.annotation, d.value.span, f"constant '{d.name}'")
            elif d.kind in ("output", "trigger"):
                self.declaration(d)
        self.solve_projections()
        return self.finish()

    def declaration(self, d: ast.Declaration):
        for label, clause in d.clauses():
            if clause.when is not None:
                self.expect(self.infer(clause.when, d), BOOL, clause.when.span, f"{label} condition of '{d.name}'")
            if clause.with_ is None:
                continue
            t = self.infer(clause.with_, d)
            if label == "spawn":
                params = self.param_vars[d.name]
                if len(params) == 1:
                    self.expect(t, params[0], clause.with_.span, f"parameter of '{d.name}'")
                elif params:
                    self.expect(t, TupleType(tuple(params)), clause.with_.span, f"parameters of '{d.name}'")
            elif label == "eval":
                if d.kind == "trigger":
                    self.expect(t, STRING, clause.with_.span, f"message of trigger '{d.name}'")
                else:
                    self.expect(t, self.stream_vars[d.name], clause.with_.span, f"value of '{d.name}'")

    # expressions -------------------------------------------------------

    def infer(self, e: ast.Expr, d: ast.Declaration):
        t = self._infer(e, d)
        self.exprs[id(e)] = t
        return t

    def _infer(self, e, d):
        if isinstance(e, ast.Literal):
            return {"float": FLOAT, "bool": BOOL, "str": STRING}.get(e.kind) or TVar(int_literal=True)
        if isinstance(e, ast.ConstRef):
            return self.stream_vars[e.name]
        if isinstance(e, ast.ParamRef):
            return self.param_vars[d.name][e.index]
        if isinstance(e, ast.StreamRef):
            self.stream_args(e, d)
            return self.stream_vars[e.name]
        if isinstance(e, ast.Offset):
            return self.opt(self.target(e.target, d))
        if isinstance(e, ast.Hold):
            t = self.target(e.target, d)
            if e.default is None:
                return self.opt(t)
            self.expect(self.infer(e.default, d), t, e.default.span, "hold default")
            return t
        if isinstance(e, ast.Defaults):
            operand = self.resolve(self.infer(e.operand, d))
            inner = TVar()
            if isinstance(operand, (Prim, TupleType)):
                self.bag.error("defaults", f"defaults(to:) applied to non-optional {operand}", e.span)
                inner = operand
            else:
                self.expect(operand, OptionalType(inner), e.operand.span, "defaults operand")
            self.expect(self.infer(e.default, d), inner, e.default.span, "default value")
            return inner
        if isinstance(e, (ast.Window, ast.InstanceAgg)):
            t = self.target(e.target, d)
            result = self.aggregate(e.fn, t, e.span)
            if isinstance(e, ast.Window) and e.exact:
                return self.opt(result)
            return result
        if isinstance(e, ast.Unary):
            t = self.infer(e.operand, d)
            if e.op == "!":
                self.expect(t, BOOL, e.operand.span, "operand of '!'")
                return BOOL
            self.signed.append((t, e.span))
            return t
        if isinstance(e, ast.Binary):
            return self.binary(e, d)
        if isinstance(e, ast.FuncCall):
            args = [self.infer(a, d) for a in e.args]
            if e.func in ("sqrt", "sin", "cos"):
                self.expect(args[0], FLOAT, e.args[0].span, f"argument of {e.func}")
                return FLOAT
            for a, node in zip(args[1:], e.args[1:]):
                self.expect(a, args[0], node.span, f"arguments of {e.func}")
            self.numeric.append((args[0], e.span, e.func))
            return args[0]
        if isinstance(e, ast.TupleExpr):
            return TupleType(tuple(self.infer(i, d) for i in e.items))
        if isinstance(e, ast.Project):
            operand = self.infer(e.operand, d)
            result = TVar()
            self.projections.append((operand, e.index, result, e.span))
            return result
        if isinstance(e, ast.Format):
            for a in e.args:
                self.infer(a, d)
            if e.template.count("{}") != len(e.args):
                self.bag.error("format", f"template has {e.template.count('{}')} placeholder(s) for {len(e.args)} argument(s)", e.span)
            return STRING
        self.bag.error("type", f"cannot type {type(e).__name__}", e.span)
        return TVar()

    def stream_args(self, ref: ast.StreamRef, d):
        params = self.param_vars.get(ref.name, [])
        for a, p in zip(ref.args, params):
            self.expect(self.infer(a, d), p, a.span, f"argument of '{ref.name}'")

    def target(self, ref, d):
        self.exprs[id(ref)] = self.stream_vars.get(getattr(ref, "name", None), TVar())
        if isinstance(ref, ast.StreamRef):
            self.stream_args(ref, d)
            return self.stream_vars[ref.name]
        return TVar()

    def aggregate(self, fn: str, t, span: Span):
        if fn == "count":
            return UINT
        if fn in ("exists", "forall"):
            self.expect(t, BOOL, span, f"{fn} aggregation")
            return BOOL
        self.numeric.append((t, span, fn))
        if fn == "sum":
            return t
        if fn == "avg":
            return OptionalType(FLOAT)
        return self.opt(t)

    def binary(self, e: ast.Binary, d):
        left = self.infer(e.left, d)
        right = self.infer(e.right, d)
        op = e.op
        if op in ("&&", "||"):
            self.expect(left, BOOL, e.left.span, f"left operand of '{op}'")
            self.expect(right, BOOL, e.right.span, f"right operand of '{op}'")
            return BOOL
        agreed = self.expect(right, left, e.span, f"operands of '{op}'")
        if op in ("==", "!="):
            return BOOL
        if op in ("<", "<=", ">", ">="):
            if agreed:
                self.numeric.append((left, e.span, op + " (or String)"))
            return BOOL
        if agreed:
            self.numeric.append((left, e.span, op))
        if op == "**":
            return FLOAT
        return left

    # solving -----------------------------------------------------------

    def solve_projections(self):
        pending = list(self.projections)
        while pending:
            progress = False
            rest = []
            for operand, index, result, span in pending:
                t = self.resolve(operand)
                wrapped = False
                if isinstance(t, OptionalType):
                    wrapped = True
                    t = self.resolve(t.inner)
                if isinstance(t, TVar):
                    rest.append((operand, index, result, span))
                    continue
                progress = True
                if not isinstance(t, TupleType) or index >= len(t.items):
                    self.bag.error("type", f"cannot project .{index} out of {self.show(t)}", span)
                    continue
                item = t.items[index]
                self.expect(result, self.opt(item) if wrapped else item, span, "projection")
            if not progress:
                for *_, span in rest:
                    self.bag.error("type", "cannot infer the tuple type of this projection", span)
                break
            pending = rest

    def default_literals(self, t):
        t = self.resolve(t)
        if isinstance(t, TVar) and t.int_literal:
            t.bound = INT
        elif isinstance(t, TupleType):
            for i in t.items:
                self.default_literals(i)
        elif isinstance(t, OptionalType):
            self.default_literals(t.inner)

    def finish(self) -> ValueTypes:
        for t in list(self.exprs.values()) + list(self.stream_vars.values()):
            self.default_literals(t)
        for vs in self.param_vars.values():
            for v in vs:
                self.default_literals(v)
        for t, span, what in self.numeric:
            z = self.zonk(t)
            ok = z in NUMERIC or (what.endswith("(or String)") and z == STRING)
            if not ok and not isinstance(z, TVar):
                self.bag.error("type", f"'{what.split(' ')[0]}' needs numeric operands, found {z}", span)
        for t, span in self.signed:
            z = self.zonk(t)
            if z not in (INT, FLOAT) and not isinstance(z, TVar):
                self.bag.error("type", f"unary minus needs Int or Float, found {z}", span)
        streams = {}
        for name, t in self.stream_vars.items():
            z = self.zonk(t)
            decl = self.spec.get(name)
            if decl.kind in ("input", "constant"):
                streams[name] = z
                continue
            if isinstance(z, TVar) or _has_var(z):
                self.bag.error("type", f"cannot infer the type of '{name}'", decl.span)
            elif isinstance(z, OptionalType):
                self.bag.error("type", f"stream '{name}' has optional type {z}; add defaults(to:) or hold(or:)", decl.span)
            streams[name] = z
        params = {}
        for name, vs in self.param_vars.items():
            zs = tuple(self.zonk(v) for v in vs)
            for z in zs:
                if z not in PARAMETER_TYPES:
                    self.bag.error("parameter-type", f"parameters of '{name}' must be Int, UInt, Bool or String, found {self.show(z)}",
                                   self.spec.get(name).span)
            params[name] = zs
        exprs = {k: self.zonk(t) for k, t in self.exprs.items()}
        self.bag.raise_if_any()
        return ValueTypes(streams, params, exprs)


def _has_var(t) -> bool:
    if isinstance(t, TVar):
        return True
    if isinstance(t, TupleType):
        return any(_has_var(i) for i in t.items)
    if isinstance(t, OptionalType):
        return _has_var(t.inner)
    return False


def infer_value_types(spec: ast.Specification) -> ValueTypes:
    """Infer a value type for every stream, parameter and expression node.

    Raises :class:`SpecError` on mismatches, non-Bool conditions, defaults on
    non-optional values, or streams whose type stays optional or unknown.
    """
    bag = DiagnosticBag()
    try:
        return _Solver(spec, bag).run()
    except RecursionError:
        raise SpecError(error("type", "expression nested too deeply for type inference")) from None

"""Name resolution: binds identifiers to streams, constants, parameters and math functions."""

from __future__ import annotations

import dataclasses

from ..diagnostics import DiagnosticBag, SpecError, error
from . import ast

MATH_FUNCTIONS = {"sqrt": 1, "sin": 1, "cos": 1, "abs": 1, "min": 2, "max": 2}


def resolve_names(spec: ast.Specification) -> ast.Specification:
    """Return a copy of ``spec`` where every identifier is bound.

    ``Name``/``Call`` nodes become ``StreamRef``, ``ParamRef``, ``ConstRef`` or
    ``FuncCall``. Raises :class:`SpecError` listing every unresolved name or
    arity mismatch.
    """
    bag = DiagnosticBag()
    resolver = _Resolver(spec, bag)
    decls = [resolver.declaration(d) for d in spec.declarations]
    bag.raise_if_any()
    return ast.Specification(spec.imports, tuple(decls))


class _Resolver:
    def __init__(self, spec: ast.Specification, bag: DiagnosticBag):
        self.spec = spec
        self.bag = bag
        self.decls = {d.name: d for d in spec.declarations}
        self.math = "math" in spec.imports
        self.params: tuple[str, ...] = ()

    def declaration(self, decl: ast.Declaration) -> ast.Declaration:
        if decl.kind in ("input", "constant"):
            return decl
        if decl.params and (decl.spawn is None or decl.spawn.with_ is None):
            self.bag.error("spawn", f"parameterized stream '{decl.name}' needs 'spawn with <parameters>'", decl.span)
        for p in decl.params:
            if p in self.decls:
                self.bag.error("duplicate-name", f"parameter '{p}' of '{decl.name}' shadows a declaration", decl.span)
        if decl.spawn is not None and decl.spawn.with_ is not None:
            w = decl.spawn.with_
            arity = len(w.items) if isinstance(w, ast.TupleExpr) else 1
            if not decl.params:
                self.bag.error("arity", f"'{decl.name}' has no parameters but its spawn clause has a with-expression", w.span)
            elif arity != len(decl.params):
                self.bag.error("arity", f"spawn of '{decl.name}' yields {arity} values for {len(decl.params)} parameters", w.span)
        changes = {}
        for label, clause in decl.clauses():
            # Parameters are unbound while the spawn clause computes them.
            self.params = () if label == "spawn" else decl.params
            changes[label] = dataclasses.replace(
                clause,
                when=self.expr(clause.when) if clause.when is not None else None,
                with_=self.expr(clause.with_) if clause.with_ is not None else None,
            )
            self.pacing(clause.pacing)
        self.params = ()
        return dataclasses.replace(decl, **changes)

    def pacing(self, p):
        if isinstance(p, ast.PVar):
            target = self.decls.get(p.name)
            if target is None or target.kind != "input":
                self.bag.error("unknown-identifier", f"activation condition mentions '{p.name}', which is not an input stream", p.span)
        elif isinstance(p, (ast.PAnd, ast.POr)):
            self.pacing(p.left)
            self.pacing(p.right)

    def stream_target(self, expr: ast.Expr, what: str, bare: bool = False) -> ast.Expr:
        """Resolve the receiver of offset/hold/aggregate, which must denote a stream."""
        resolved = self.expr(expr, allow_bare_parameterized=bare)
        if not isinstance(resolved, ast.StreamRef):
            self.bag.error("not-a-stream", f"{what} needs a stream as its receiver", expr.span)
        return resolved

    def expr(self, e: ast.Expr, allow_bare_parameterized: bool = False) -> ast.Expr:
        if isinstance(e, ast.Name):
            if e.ident in self.params:
                return ast.ParamRef(e.ident, self.params.index(e.ident), span=e.span)
            target = self.decls.get(e.ident)
            if target is None:
                self.bag.error("unknown-identifier", f"unknown identifier '{e.ident}'", e.span)
                return e
            if target.kind == "constant":
                return ast.ConstRef(e.ident, span=e.span)
            if target.kind == "trigger":
                self.bag.error("trigger-access", "trigger streams cannot be accessed", e.span)
                return e
            if target.params and not allow_bare_parameterized:
                self.bag.error("arity", f"'{e.ident}' is parameterized and needs {len(target.params)} argument(s)", e.span)
            return ast.StreamRef(e.ident, (), span=e.span)
        if isinstance(e, ast.Call):
            args = tuple(self.expr(a) for a in e.args)
            target = self.decls.get(e.func)
            if target is None or target.kind == "constant":
                if e.func in MATH_FUNCTIONS:
                    if not self.math:
                        self.bag.error("unknown-identifier", f"'{e.func}' requires 'import math'", e.span)
                    elif len(args) != MATH_FUNCTIONS[e.func]:
                        self.bag.error("arity", f"'{e.func}' takes {MATH_FUNCTIONS[e.func]} argument(s)", e.span)
                    return ast.FuncCall(e.func, args, span=e.span)
                self.bag.error("unknown-identifier", f"unknown function or stream '{e.func}'", e.span)
                return e
            if target.kind == "trigger":
                self.bag.error("trigger-access", "trigger streams cannot be accessed", e.span)
                return e
            if len(args) != len(target.params):
                self.bag.error("arity", f"'{e.func}' takes {len(target.params)} parameter(s), got {len(args)}", e.span)
            return ast.StreamRef(e.func, args, span=e.span)
        if isinstance(e, ast.Offset):
            return dataclasses.replace(e, target=self.stream_target(e.target, "offset"))
        if isinstance(e, ast.Hold):
            default = self.expr(e.default) if e.default is not None else None
            return dataclasses.replace(e, target=self.stream_target(e.target, "hold"), default=default)
        if isinstance(e, ast.Window):
            target = self.stream_target(e.target, "a sliding window")
            if isinstance(target, ast.StreamRef):
                for a in target.args:
                    if not all(isinstance(n, (ast.ParamRef, ast.Literal, ast.Unary)) for n in ast.walk(a)):
                        self.bag.error("window-target", "window instance arguments may only use parameters and literals", a.span)
            return dataclasses.replace(e, target=target)
        if isinstance(e, ast.InstanceAgg):
            target = self.stream_target(e.target, "an instance aggregation", bare=True)
            if isinstance(target, ast.StreamRef):
                decl = self.decls[target.name]
                if not decl.params or target.args:
                    self.bag.error("instance-aggregation", "instance aggregation needs a parameterized stream without arguments", e.span)
            return dataclasses.replace(e, target=target)
        if isinstance(e, ast.Defaults):
            return dataclasses.replace(e, operand=self.expr(e.operand), default=self.expr(e.default))
        if isinstance(e, ast.Unary):
            return dataclasses.replace(e, operand=self.expr(e.operand))
        if isinstance(e, ast.Binary):
            return dataclasses.replace(e, left=self.expr(e.left), right=self.expr(e.right))
        if isinstance(e, ast.TupleExpr):
            return dataclasses.replace(e, items=tuple(self.expr(i) for i in e.items))
        if isinstance(e, ast.Project):
            return dataclasses.replace(e, operand=self.expr(e.operand))
        if isinstance(e, ast.Format):
            return dataclasses.replace(e, args=tuple(self.expr(a) for a in e.args))
        return e


def check_resolved(spec: ast.Specification) -> None:
    """Cheap sanity check used by tests: no parse-level names survive."""
    for decl in spec.declarations:
        for _, clause in decl.clauses():
            for root in (clause.when, clause.with_):
                if root is None:
                    continue
                for node in ast.walk(root):
                    if isinstance(node, (ast.Name, ast.Call)):
                        raise SpecError(error("internal", "unresolved name survived", node.span))

"""Recursive-descent parser.

Operator precedence, loosest first::

    ||  <  &&  <  comparisons  <  + -  <  * / %  <  **  <  unary ! -  <  method chain

``**`` is right-associative, comparisons do not chain.
"""

from __future__ import annotations

from fractions import Fraction

from ..diagnostics import Span, SpecError, error
from ..valuetypes import TYPE_NAMES, TupleType, ValueType
from . import ast
from .lexer import TIME_UNITS, Token, tokenize

COMPARISONS = ("=", "==", "!=", "<", "<=", ">", ">=")
AGGREGATION_FUNCTIONS = ("count", "sum", "avg", "min", "max", "exists", "forall")
CLAUSE_KEYWORDS = ("spawn", "eval", "close")
MAX_DEPTH = 200


def parse(source: str) -> ast.Specification:
    """Parse specification text; raises :class:`SpecError` on any syntax error."""
    try:
        return _Parser(tokenize(source)).specification()
    except RecursionError:
        raise SpecError(error("syntax", "expression nested too deeply", Span(0, len(source)))) from None


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0
        self.depth = 0
        self.trigger_count = 0

    # token helpers ------------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, k: int = 1) -> Token:
        return self.tokens[min(self.pos + k, len(self.tokens) - 1)]

    def at(self, text: str, kind: str | None = None) -> bool:
        t = self.tok
        return t.text == text and (kind is None or t.kind == kind) and t.kind != "string"

    def advance(self) -> Token:
        t = self.tok
        if t.kind != "eof":
            self.pos += 1
        return t

    def fail(self, message: str, tok: Token | None = None):
        tok = tok or self.tok
        found = "end of input" if tok.kind == "eof" else repr(tok.text)
        raise SpecError(error("syntax", f"{message}, found {found}", tok.span))

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.fail(f"expected '{text}'")
        return self.advance()

    def ident(self) -> Token:
        if self.tok.kind != "ident":
            self.fail("expected identifier")
        return self.advance()

    def span_from(self, start: Span) -> Span:
        prev = self.tokens[self.pos - 1] if self.pos > 0 else self.tok
        return Span(start.start, max(start.end, prev.span.end))

    # declarations -------------------------------------------------------

    def specification(self) -> ast.Specification:
        imports: list[str] = []
        decls: list[ast.Declaration] = []
        while self.tok.kind != "eof":
            t = self.tok
            if t.kind != "keyword":
                self.fail("expected a declaration")
            if t.text == "import":
                self.advance()
                name = self.ident()
                if name.text != "math":
                    raise SpecError(error("unknown-import", f"unknown module '{name.text}'", name.span))
                imports.append(name.text)
            elif t.text == "input":
                decls.extend(self.input_decl())
            elif t.text == "constant":
                decls.append(self.constant_decl())
            elif t.text == "output":
                decls.append(self.output_decl())
            elif t.text == "trigger":
                decls.append(self.trigger_decl())
            else:
                self.fail("expected a declaration")
        seen: dict[str, ast.Declaration] = {}
        for d in decls:
            if d.name in seen:
                raise SpecError(error("duplicate-name", f"'{d.name}' is declared more than once", d.span))
            seen[d.name] = d
        return ast.Specification(tuple(imports), tuple(decls))

    def input_decl(self) -> list[ast.Declaration]:
        start = self.advance().span
        decls = []
        while True:
            name = self.ident()
            self.expect(":")
            vtype = self.value_type()
            decls.append(ast.Declaration("input", name.text, annotation=vtype, span=self.span_from(start)))
            if not self.at(","):
                return decls
            self.advance()

    def constant_decl(self) -> ast.Declaration:
        start = self.advance().span
        name = self.ident()
        self.expect(":")
        vtype = self.value_type()
        self.expect(":=")
        lit_start = self.tok
        value = self.unary()
        if not _is_literal(value):
            self.fail("constant value must be a literal", lit_start)
        return ast.Declaration("constant", name.text, annotation=vtype, value=value, span=self.span_from(start))

    def value_type(self) -> ValueType:
        if self.at("("):
            self.advance()
            items = [self.value_type()]
            while self.at(","):
                self.advance()
                items.append(self.value_type())
            self.expect(")")
            return TupleType(tuple(items))
        t = self.tok
        if t.kind != "ident" or t.text not in TYPE_NAMES:
            self.fail("expected a value type")
        self.advance()
        return TYPE_NAMES[t.text]

    def params(self) -> tuple[str, ...]:
        self.expect("(")
        names = [self.ident()]
        while self.at(","):
            self.advance()
            names.append(self.ident())
        self.expect(")")
        seen = set()
        for n in names:
            if n.text in seen:
                raise SpecError(error("duplicate-name", f"parameter '{n.text}' declared twice", n.span))
            seen.add(n.text)
        return tuple(n.text for n in names)

    def output_decl(self) -> ast.Declaration:
        start = self.advance().span
        name = self.ident()
        params = self.params() if self.at("(") else ()
        annotation = None
        if self.at(":"):
            self.advance()
            annotation = self.value_type()
        if self.at("@") or self.at(":="):
            pacing = self.pacing() if self.at("@") else None
            clause_start = self.expect(":=").span
            expr = self.expr()
            clauses = {"eval": ast.Clause(pacing, None, expr, span=self.span_from(clause_start))}
        else:
            clauses = self.clauses(name)
        return ast.Declaration("output", name.text, params, annotation, span=self.span_from(start), **clauses)

    def trigger_decl(self) -> ast.Declaration:
        start_tok = self.advance()
        name = f"trigger_{self.trigger_count}"
        self.trigger_count += 1
        params: tuple[str, ...] = ()
        if self.at("(") and self._params_then_clause():
            params = self.params()
        if self.tok.kind == "keyword" and self.tok.text in CLAUSE_KEYWORDS:
            clauses = self.clauses(start_tok)
            ev = clauses.get("eval")
            if ev is None or ev.with_ is None:
                raise SpecError(error("syntax", "trigger eval clause needs 'with <message>'", start_tok.span))
            return ast.Declaration("trigger", name, params, span=self.span_from(start_tok.span), **clauses)
        pacing = self.pacing() if self.at("@") else None
        cond = self.expr()
        if self.tok.kind != "string":
            self.fail("expected trigger message string")
        message = self.postfix()
        ev = ast.Clause(pacing, cond, message, span=self.span_from(start_tok.span))
        return ast.Declaration("trigger", name, eval=ev, span=self.span_from(start_tok.span))

    def _params_then_clause(self) -> bool:
        k = 1
        while True:
            if self.peek(k).kind != "ident":
                return False
            k += 1
            t = self.peek(k)
            if t.text == ")" and t.kind == "op":
                nxt = self.peek(k + 1)
                return nxt.kind == "keyword" and nxt.text in CLAUSE_KEYWORDS
            if not (t.text == "," and t.kind == "op"):
                return False
            k += 1

    def clauses(self, owner: Token) -> dict[str, ast.Clause]:
        found: dict[str, ast.Clause] = {}
        while self.tok.kind == "keyword" and self.tok.text in CLAUSE_KEYWORDS:
            kw = self.advance()
            if kw.text in found:
                raise SpecError(error("syntax", f"duplicate '{kw.text}' clause", kw.span))
            pacing = self.pacing() if self.at("@") else None
            when = with_ = None
            if self.at("when", "keyword"):
                self.advance()
                when = self.expr()
            if self.at("with", "keyword"):
                if kw.text == "close":
                    self.fail("close clauses take no 'with' expression")
                self.advance()
                with_ = self.expr()
            found[kw.text] = ast.Clause(pacing, when, with_, span=self.span_from(kw.span))
        if "eval" not in found:
            raise SpecError(error("syntax", "stream declaration needs an eval clause or ':='", owner.span))
        if found["eval"].with_ is None:
            raise SpecError(error("syntax", "eval clause needs 'with <expression>'", found["eval"].span))
        return found

    # pacing annotations -------------------------------------------------

    def pacing(self) -> ast.PacingExpr:
        self.expect("@")
        if self.tok.kind == "quantity":
            t = self.advance()
            unit, ns = t.value
            if ns.denominator != 1 or ns <= 0:
                raise SpecError(error("frequency", f"'{t.text}' is not a whole number of nanoseconds", t.span))
            result: ast.PacingExpr = ast.PFrequency(int(ns), t.text, span=t.span)
        else:
            result = self.pacing_or()
        self.expect("@")
        return result

    def pacing_or(self) -> ast.PacingExpr:
        left = self.pacing_and()
        while self.at("||"):
            self.advance()
            right = self.pacing_and()
            left = ast.POr(left, right, span=left.span + right.span)
        return left

    def pacing_and(self) -> ast.PacingExpr:
        left = self.pacing_atom()
        while self.at("&&"):
            self.advance()
            right = self.pacing_atom()
            left = ast.PAnd(left, right, span=left.span + right.span)
        return left

    def pacing_atom(self) -> ast.PacingExpr:
        t = self.tok
        if self.at("("):
            self.advance()
            inner = self.pacing_or()
            self.expect(")")
            return inner
        if t.kind == "keyword" and t.text == "true":
            self.advance()
            return ast.PTrue(span=t.span)
        if t.kind == "ident":
            self.advance()
            return ast.PVar(t.text, span=t.span)
        if self.at("!"):
            raise SpecError(error("pacing", "activation conditions must be negation-free", t.span))
        self.fail("expected activation condition or frequency")

    # expressions --------------------------------------------------------

    def expr(self) -> ast.Expr:
        self.depth += 1
        if self.depth > MAX_DEPTH:
            raise SpecError(error("syntax", "expression nested too deeply", self.tok.span))
        try:
            return self.or_expr()
        finally:
            self.depth -= 1

    def _binary_level(self, ops, next_level) -> ast.Expr:
        left = next_level()
        while self.tok.kind == "op" and self.tok.text in ops:
            op = self.advance().text
            right = next_level()
            left = ast.Binary(op, left, right, span=left.span + right.span)
        return left

    def or_expr(self):
        return self._binary_level(("||",), self.and_expr)

    def and_expr(self):
        return self._binary_level(("&&",), self.comparison)

    def comparison(self):
        left = self.additive()
        if self.tok.kind == "op" and self.tok.text in COMPARISONS:
            op = self.advance().text
            right = self.additive()
            left = ast.Binary("==" if op == "=" else op, left, right, span=left.span + right.span)
            if self.tok.kind == "op" and self.tok.text in COMPARISONS:
                self.fail("comparisons cannot be chained")
        return left

    def additive(self):
        return self._binary_level(("+", "-"), self.multiplicative)

    def multiplicative(self):
        return self._binary_level(("*", "/", "%"), self.power)

    def power(self):
        base = self.unary()
        if self.at("**"):
            self.advance()
            self.depth += 1
            if self.depth > MAX_DEPTH:
                raise SpecError(error("syntax", "expression nested too deeply", self.tok.span))
            try:
                exponent = self.power()
            finally:
                self.depth -= 1
            return ast.Binary("**", base, exponent, span=base.span + exponent.span)
        return base

    def unary(self):
        if self.at("-") or self.at("!"):
            t = self.advance()
            self.depth += 1
            if self.depth > MAX_DEPTH:
                raise SpecError(error("syntax", "expression nested too deeply", self.tok.span))
            try:
                operand = self.unary()
            finally:
                self.depth -= 1
            return ast.Unary(t.text, operand, span=t.span + operand.span)
        return self.postfix()

    def postfix(self):
        expr = self.primary()
        while self.at("."):
            self.advance()
            t = self.tok
            if t.kind == "int":
                self.advance()
                expr = ast.Project(expr, t.value, span=expr.span + t.span)
                continue
            if t.kind != "ident":
                self.fail("expected method name or tuple index after '.'")
            self.advance()
            expr = self.method(expr, t)
        return expr

    def kwarg(self, name: str) -> Token:
        t = self.tok
        if t.kind != "ident" or t.text != name:
            self.fail(f"expected '{name}:'")
        self.advance()
        self.expect(":")
        return t

    def method(self, receiver: ast.Expr, name: Token) -> ast.Expr:
        m = name.text
        self.expect("(")
        if m == "offset":
            self.kwarg("by")
            at = self.tok
            value = self.unary()
            by = _int_value(value)
            if by is None or by >= 0:
                raise SpecError(error("offset", "offset must be a strictly negative integer literal", at.span + value.span))
            self.expect(")")
            return ast.Offset(receiver, by, span=self.span_from(receiver.span))
        if m == "defaults":
            self.kwarg("to")
            default = self.expr()
            self.expect(")")
            return ast.Defaults(receiver, default, span=self.span_from(receiver.span))
        if m == "hold":
            default = None
            if not self.at(")"):
                self.kwarg("or")
                default = self.expr()
            self.expect(")")
            return ast.Hold(receiver, default, span=self.span_from(receiver.span))
        if m == "aggregate":
            key = self.ident()
            self.expect(":")
            if key.text in ("over", "over_exactly"):
                dur_tok = self.tok
                if dur_tok.kind != "quantity" or dur_tok.value[0] not in TIME_UNITS:
                    self.fail("expected a window duration such as 5s")
                self.advance()
                ns: Fraction = dur_tok.value[1]
                if ns.denominator != 1 or ns <= 0:
                    raise SpecError(error("syntax", "window duration must be a positive whole number of nanoseconds", dur_tok.span))
                fn = self._using()
                self.expect(")")
                return ast.Window(receiver, ast.Duration(int(ns), dur_tok.text), fn,
                                  key.text == "over_exactly", span=self.span_from(receiver.span))
            if key.text == "over_instances":
                sel = self.ident()
                if sel.text not in ("all", "fresh"):
                    self.fail("expected 'all' or 'fresh'", sel)
                fn = self._using()
                self.expect(")")
                return ast.InstanceAgg(receiver, sel.text, fn, span=self.span_from(receiver.span))
            self.fail("expected 'over', 'over_exactly' or 'over_instances'", key)
        if m == "format":
            if not (isinstance(receiver, ast.Literal) and receiver.kind == "str"):
                self.fail("format() applies to string literals", name)
            args = self.arguments()
            template = receiver.value.replace("{{}}", "{}")
            return ast.Format(template, tuple(args), span=self.span_from(receiver.span))
        self.fail(f"unknown method '{m}'", name)

    def _using(self) -> str:
        self.expect(",")
        self.kwarg("using")
        fn = self.ident()
        if fn.text not in AGGREGATION_FUNCTIONS:
            self.fail("unknown aggregation function", fn)
        return fn.text

    def arguments(self) -> list[ast.Expr]:
        args: list[ast.Expr] = []
        if not self.at(")"):
            args.append(self.expr())
            while self.at(","):
                self.advance()
                args.append(self.expr())
        self.expect(")")
        return args

    def primary(self) -> ast.Expr:
        t = self.tok
        if t.kind == "int":
            self.advance()
            return ast.Literal(t.value, "int", span=t.span)
        if t.kind == "float":
            self.advance()
            return ast.Literal(t.value, "float", span=t.span)
        if t.kind == "string":
            self.advance()
            return ast.Literal(t.value, "str", span=t.span)
        if t.kind == "keyword" and t.text in ("true", "false"):
            self.advance()
            return ast.Literal(t.text == "true", "bool", span=t.span)
        if t.kind == "ident":
            self.advance()
            if self.at("("):
                self.advance()
                args = self.arguments()
                return ast.Call(t.text, tuple(args), span=self.span_from(t.span))
            return ast.Name(t.text, span=t.span)
        if self.at("("):
            self.advance()
            items = [self.expr()]
            while self.at(","):
                self.advance()
                if self.at(")"):
                    break
                items.append(self.expr())
            self.expect(")")
            if len(items) == 1:
                return items[0]
            return ast.TupleExpr(tuple(items), span=self.span_from(t.span))
        self.fail("expected an expression")


def _int_value(expr: ast.Expr):
    if isinstance(expr, ast.Literal) and expr.kind == "int":
        return expr.value
    if isinstance(expr, ast.Unary) and expr.op == "-" and isinstance(expr.operand, ast.Literal) and expr.operand.kind == "int":
        return -expr.operand.value
    return None


def _is_literal(expr: ast.Expr) -> bool:
    if isinstance(expr, ast.Literal):
        return True
    return (isinstance(expr, ast.Unary) and expr.op == "-" and isinstance(expr.operand, ast.Literal)
            and expr.operand.kind in ("int", "float"))

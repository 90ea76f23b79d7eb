from __future__ import annotations

from . import ast


def format_spec(spec: ast.Specification) -> str:
    lines = [f"import {m}" for m in spec.imports]
    for d in spec.declarations:
        lines.append(format_declaration(d))
    return "\n".join(lines) + "\n"


def format_declaration(d: ast.Declaration) -> str:
    if d.kind == "input":
        return f"input {d.name}: {d.annotation}"
    if d.kind == "constant":
        return f"constant {d.name}: {d.annotation} := {format_expr(d.value)}"
    head = "output " + d.name if d.kind == "output" else "trigger"
    if d.params:
        head += "(" + ", ".join(d.params) + ")"
    if d.annotation is not None:
        head += f": {d.annotation}"
    parts = [head]
    for label, clause in d.clauses():
        text = "    " + label
        if clause.pacing is not None:
            text += " " + format_pacing(clause.pacing)
        if clause.when is not None:
            text += " when " + format_expr(clause.when)
        if clause.with_ is not None:
            text += " with " + format_expr(clause.with_)
        parts.append(text)
    return "\n".join(parts)


def format_pacing(p: ast.PacingExpr) -> str:
    return "@" + _pacing(p) + "@"


def _pacing(p: ast.PacingExpr) -> str:
    if isinstance(p, ast.PVar):
        return p.name
    if isinstance(p, ast.PTrue):
        return "true"
    if isinstance(p, ast.PFrequency):
        return p.text or f"{p.period_ns}ns"
    op = "&&" if isinstance(p, ast.PAnd) else "||"
    return f"({_pacing(p.left)} {op} {_pacing(p.right)})"


def _string(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n").replace("\t", "\\t") + '"'


def format_expr(e: ast.Expr) -> str:
    """Fully parenthesised rendering; re-parsing yields an equal tree."""
    if isinstance(e, ast.Literal):
        if e.kind == "str":
            return _string(e.value)
        if e.kind == "bool":
            return "true" if e.value else "false"
        return repr(e.value)
    if isinstance(e, ast.Name):
        return e.ident
    if isinstance(e, (ast.ParamRef, ast.ConstRef)):
        return e.name
    if isinstance(e, ast.StreamRef):
        if e.args:
            return f"{e.name}({', '.join(format_expr(a) for a in e.args)})"
        return e.name
    if isinstance(e, ast.Call):
        return f"{e.func}({', '.join(format_expr(a) for a in e.args)})"
    if isinstance(e, ast.FuncCall):
        return f"{e.func}({', '.join(format_expr(a) for a in e.args)})"
    if isinstance(e, ast.Unary):
        return f"({e.op}{format_expr(e.operand)})"
    if isinstance(e, ast.Binary):
        return f"({format_expr(e.left)} {e.op} {format_expr(e.right)})"
    if isinstance(e, ast.Offset):
        return f"{format_expr(e.target)}.offset(by: {e.by})"
    if isinstance(e, ast.Defaults):
        return f"{format_expr(e.operand)}.defaults(to: {format_expr(e.default)})"
    if isinstance(e, ast.Hold):
        if e.default is None:
            return f"{format_expr(e.target)}.hold()"
        return f"{format_expr(e.target)}.hold(or: {format_expr(e.default)})"
    if isinstance(e, ast.Window):
        key = "over_exactly" if e.exact else "over"
        return f"{format_expr(e.target)}.aggregate({key}: {e.duration}, using: {e.fn})"
    if isinstance(e, ast.InstanceAgg):
        return f"{format_expr(e.target)}.aggregate(over_instances: {e.selection}, using: {e.fn})"
    if isinstance(e, ast.TupleExpr):
        return "(" + ", ".join(format_expr(i) for i in e.items) + ")"
    if isinstance(e, ast.Project):
        return f"{format_expr(e.operand)}.{e.index}"
    if isinstance(e, ast.Format):
        return f"{_string(e.template)}.format({', '.join(format_expr(a) for a in e.args)})"
    raise TypeError(f"cannot format {type(e).__name__}")

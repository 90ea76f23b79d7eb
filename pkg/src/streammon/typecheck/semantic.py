"""Semantic types: spawn, eval and close conditions as propositional formulas.

Conditions are normalised into formulas whose atoms are the canonical text of
non-boolean-connective sub-expressions. Entailment treats distinct atoms as
independent variables, so it is a sound over-approximation: syntactically
different but equivalent conditions are rejected, never the reverse.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

from ..analysis import clause_accesses
from ..diagnostics import DiagnosticBag
from ..frontend import ast
from ..frontend.printer import format_expr
from .pacing import Periodic, PacingTypes, SYNC_KINDS

# A formula is a nested tuple:
#   ("const", bool) | ("atom", text) | ("not", f) | ("and", frozenset) | ("or", frozenset)
TRUE = ("const", True)
FALSE = ("const", False)
MAX_ATOMS = 20


def atom(text: str):
    return ("atom", text)


def f_not(f):
    if f[0] == "const":
        return ("const", not f[1])
    if f[0] == "not":
        return f[1]
    return ("not", f)


def _junction(op, parts):
    unit, zero = (TRUE, FALSE) if op == "and" else (FALSE, TRUE)
    flat = set()
    for p in parts:
        if p == zero:
            return zero
        if p == unit:
            continue
        if p[0] == op:
            flat |= p[1]
        else:
            flat.add(p)
    if not flat:
        return unit
    if len(flat) == 1:
        return next(iter(flat))
    return (op, frozenset(flat))


def f_and(*parts):
    return _junction("and", parts)


def f_or(*parts):
    return _junction("or", parts)


def normalize(e: Optional[ast.Expr]):
    """Formula for a boolean expression; ``None`` (absent condition) is true."""
    if e is None:
        return TRUE
    if isinstance(e, ast.Literal) and e.kind == "bool":
        return ("const", bool(e.value))
    if isinstance(e, ast.Unary) and e.op == "!":
        return f_not(normalize(e.operand))
    if isinstance(e, ast.Binary) and e.op == "&&":
        return f_and(normalize(e.left), normalize(e.right))
    if isinstance(e, ast.Binary) and e.op == "||":
        return f_or(normalize(e.left), normalize(e.right))
    return atom(format_expr(e))


def atoms(f) -> set[str]:
    if f[0] == "atom":
        return {f[1]}
    if f[0] == "const":
        return set()
    if f[0] == "not":
        return atoms(f[1])
    return set().union(*(atoms(p) for p in f[1]))


def evaluate(f, env: dict[str, bool]) -> bool:
    tag = f[0]
    if tag == "const":
        return f[1]
    if tag == "atom":
        return env[f[1]]
    if tag == "not":
        return not evaluate(f[1], env)
    if tag == "and":
        return all(evaluate(p, env) for p in f[1])
    return any(evaluate(p, env) for p in f[1])


def entails(lhs, rhs) -> bool:
    """Propositional entailment with atoms as free variables (truth table)."""
    if lhs == rhs or lhs == FALSE or rhs == TRUE:
        return True
    names = sorted(atoms(lhs) | atoms(rhs))
    if len(names) > MAX_ATOMS:
        return False
    for values in itertools.product((False, True), repeat=len(names)):
        env = dict(zip(names, values))
        if evaluate(lhs, env) and not evaluate(rhs, env):
            return False
    return True


def format_formula(f) -> str:
    tag = f[0]
    if tag == "const":
        return "true" if f[1] else "false"
    if tag == "atom":
        return f[1]
    if tag == "not":
        return "!" + format_formula(f[1])
    sep = " && " if tag == "and" else " || "
    return "(" + sep.join(sorted(format_formula(p) for p in f[1])) + ")"


@dataclass(frozen=True)
class SemanticType:
    spawn: tuple
    eval: tuple
    close: tuple

    def __str__(self) -> str:
        return (f"spawn {format_formula(self.spawn)}; eval {format_formula(self.eval)}; "
                f"close {format_formula(self.close)}")


def semantic_type(decl: ast.Declaration, pacing: PacingTypes) -> SemanticType:
    if decl.kind == "input":
        return SemanticType(TRUE, TRUE, FALSE)
    if decl.spawn is not None:
        with_ = decl.spawn.with_
        spawn = f_and(atom(str(pacing.get(decl.name, "spawn"))), normalize(decl.spawn.when),
                      atom("with " + format_expr(with_)) if with_ is not None else TRUE)
    else:
        spawn = TRUE
    if decl.close is not None:
        close = f_and(atom(str(pacing.get(decl.name, "close"))), normalize(decl.close.when))
    else:
        close = FALSE  # never closes
    return SemanticType(spawn, normalize(decl.eval.when), close)


def _contains(root: ast.Expr, node: ast.Expr) -> bool:
    return any(n is node for n in ast.walk(root))


def semantic_types(spec: ast.Specification, pacing: PacingTypes) -> dict[str, SemanticType]:
    return {d.name: semantic_type(d, pacing) for d in spec.streams}


def check_semantic_types(spec: ast.Specification, pacing: PacingTypes) -> dict[str, SemanticType]:
    """Check that every synchronous access finds its target alive and evaluated.

    For an access from ``a`` to ``b``:

    * the condition under which the access runs must entail b's eval condition;
    * from eval and close clauses, a's spawn condition must entail b's and b's
      close condition must entail a's; spawn clauses may only access streams
      that are always alive;
    * between two periodic streams the spawn and close conditions must be
      identical, since otherwise the periods can drift apart.
    """
    bag = DiagnosticBag()
    types = semantic_types(spec, pacing)
    for decl in spec.outputs:
        mine = types[decl.name]
        for label, clause in decl.clauses():
            for access in clause_accesses(decl, label, clause):
                if access.kind not in SYNC_KINDS or access.target == decl.name:
                    continue
                theirs = types[access.target]
                where = f"'{decl.name}' ({label}) accesses '{access.target}'"
                # Accesses in a with-expression only run once the when-condition held.
                condition = TRUE
                if clause.with_ is not None and _contains(clause.with_, access.node):
                    condition = normalize(clause.when)
                if not entails(condition, theirs.eval):
                    bag.error("semantic-when",
                              f"{where}, but {format_formula(condition)} does not imply its eval condition "
                              f"{format_formula(theirs.eval)}",
                              access.span)
                    continue
                periodic = (isinstance(pacing.get(decl.name, label), Periodic)
                            and isinstance(pacing.eval(access.target), Periodic))
                if label == "spawn":
                    if theirs.spawn != TRUE or theirs.close != FALSE:
                        bag.error("semantic-lifecycle",
                                  f"{where} in its spawn clause, but '{access.target}' is not alive for the whole run",
                                  access.span)
                elif periodic:
                    if theirs.spawn != mine.spawn or theirs.close != mine.close:
                        bag.error("semantic-periodic",
                                  f"{where}; both are periodic, so their spawn and close conditions must be equal "
                                  f"(spawn {format_formula(mine.spawn)} vs {format_formula(theirs.spawn)}, "
                                  f"close {format_formula(mine.close)} vs {format_formula(theirs.close)})",
                                  access.span)
                else:
                    if not entails(mine.spawn, theirs.spawn):
                        bag.error("semantic-lifecycle",
                                  f"{where}, but its spawn condition {format_formula(mine.spawn)} does not imply "
                                  f"{format_formula(theirs.spawn)}",
                                  access.span)
                    elif not entails(theirs.close, mine.close):
                        bag.error("semantic-lifecycle",
                                  f"{where}, but '{access.target}' may close before it "
                                  f"({format_formula(theirs.close)} does not imply {format_formula(mine.close)})",
                                  access.span)
    bag.raise_if_any()
    return types

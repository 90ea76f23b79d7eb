"""Runtime arithmetic: checked 64-bit integers and IEEE-754 floats."""

from __future__ import annotations

import math

from ..valuetypes import FLOAT, INT, INT_MAX, INT_MIN, UINT, UINT_MAX, ValueType


class RuntimeFault(Exception):
    """An arithmetic failure inside one stream evaluation (division by zero, overflow)."""


def check_range(value: int, t: ValueType) -> int:
    if t == INT and not INT_MIN <= value <= INT_MAX:
        raise RuntimeFault(f"Int overflow: {value}")
    if t == UINT and not 0 <= value <= UINT_MAX:
        raise RuntimeFault(f"UInt overflow: {value}")
    return value


def int_div(a: int, b: int) -> int:
    if b == 0:
        raise RuntimeFault("integer division by zero")
    q = abs(a) // abs(b)
    return q if (a >= 0) == (b >= 0) else -q


def int_rem(a: int, b: int) -> int:
    # Remainder takes the sign of the dividend, matching truncating division.
    if b == 0:
        raise RuntimeFault("integer remainder by zero")
    return a - b * int_div(a, b)


def float_div(a: float, b: float) -> float:
    try:
        return a / b
    except ZeroDivisionError:
        if a == 0 or math.isnan(a):
            return math.nan
        return math.copysign(math.inf, a) * math.copysign(1.0, b)


def float_rem(a: float, b: float) -> float:
    if b == 0 or math.isinf(a):
        return math.nan
    return math.fmod(a, b)


def power(a, b) -> float:
    try:
        return math.pow(float(a), float(b))
    except OverflowError:
        return math.inf
    except ValueError:
        return math.nan


def _unary_float(fn):
    def apply(x):
        try:
            return fn(x)
        except ValueError:
            return math.nan
    return apply


MATH = {
    "sqrt": _unary_float(math.sqrt),
    "sin": _unary_float(math.sin),
    "cos": _unary_float(math.cos),
}


def binary_op(op: str, t: ValueType):
    """Return a function computing ``a op b`` for operands of type ``t``."""
    if op == "**":
        return power
    if t == FLOAT:
        return {
            "+": lambda a, b: a + b,
            "-": lambda a, b: a - b,
            "*": lambda a, b: a * b,
            "/": float_div,
            "%": float_rem,
        }[op]
    raw = {
        "+": lambda a, b: a + b,
        "-": lambda a, b: a - b,
        "*": lambda a, b: a * b,
        "/": int_div,
        "%": int_rem,
    }[op]
    return lambda a, b: check_range(raw(a, b), t)


COMPARE = {
    "==": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
}


def format_value(v) -> str:
    if v is None:
        return "#"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        return "(" + ", ".join(format_value(x) for x in v) + ")"
    return str(v)


def format_message(template: str, args) -> str:
    parts = template.split("{}")
    out = [parts[0]]
    for arg, rest in zip(args, parts[1:]):
        out.append(format_value(arg))
        out.append(rest)
    return "".join(out)

"""Value types of streams and expressions."""

from __future__ import annotations

from dataclasses import dataclass


class ValueType:
    __slots__ = ()


@dataclass(frozen=True)
class Prim(ValueType):
    name: str  # Int | UInt | Float | Bool | String

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class TupleType(ValueType):
    items: tuple[ValueType, ...]

    def __str__(self) -> str:
        return "(" + ", ".join(str(t) for t in self.items) + ")"


@dataclass(frozen=True)
class OptionalType(ValueType):
    inner: ValueType

    def __str__(self) -> str:
        return f"{self.inner}?"


def optional(t: ValueType) -> ValueType:
    # Optional never nests.
    return t if isinstance(t, OptionalType) else OptionalType(t)


INT = Prim("Int")
UINT = Prim("UInt")
FLOAT = Prim("Float")
BOOL = Prim("Bool")
STRING = Prim("String")

INT_MIN, INT_MAX = -(2**63), 2**63 - 1
UINT_MAX = 2**64 - 1

# Sized spellings are accepted in annotations and mapped onto the 64-bit types.
TYPE_NAMES: dict[str, ValueType] = {
    "Int": INT, "Int8": INT, "Int16": INT, "Int32": INT, "Int64": INT,
    "UInt": UINT, "UInt8": UINT, "UInt16": UINT, "UInt32": UINT, "UInt64": UINT,
    "Float": FLOAT, "Float32": FLOAT, "Float64": FLOAT,
    "Bool": BOOL, "String": STRING,
}

NUMERIC = frozenset({INT, UINT, FLOAT})

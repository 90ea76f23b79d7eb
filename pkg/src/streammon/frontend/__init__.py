"""Specification frontend: lexing, parsing, name resolution, pretty-printing."""

from .parser import parse
from .printer import format_expr, format_spec
from .resolve import resolve_names

__all__ = ["parse", "resolve_names", "format_spec", "format_expr"]

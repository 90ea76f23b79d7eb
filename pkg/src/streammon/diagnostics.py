"""Source-located diagnostics shared by every checking stage."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class Span:
    start: int
    end: int

    def __add__(self, other: "Span") -> "Span":
        return Span(min(self.start, other.start), max(self.end, other.end))


NO_SPAN = Span(0, 0)


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    code: str
    message: str
    span: Span = NO_SPAN

    def render(self, source: str, filename: str = "<spec>") -> str:
        line, col = line_col(source, self.span.start)
        return f"{filename}:{line}:{col}: {self.severity}[{self.code}]: {self.message}"


def line_col(source: str, offset: int) -> tuple[int, int]:
    offset = max(0, min(offset, len(source)))
    line = source.count("\n", 0, offset) + 1
    col = offset - (source.rfind("\n", 0, offset) + 1) + 1
    return line, col


def error(code: str, message: str, span: Span = NO_SPAN) -> Diagnostic:
    return Diagnostic("error", code, message, span)


class SpecError(Exception):
    """Raised when a specification is rejected; carries at least one diagnostic."""

    def __init__(self, diagnostics: list[Diagnostic] | Diagnostic):
        if isinstance(diagnostics, Diagnostic):
            diagnostics = [diagnostics]
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(f"[{d.code}] {d.message}" for d in self.diagnostics))

    @property
    def codes(self) -> list[str]:
        return [d.code for d in self.diagnostics]

    def render(self, source: str, filename: str = "<spec>") -> str:
        return "\n".join(d.render(source, filename) for d in self.diagnostics)


@dataclass
class DiagnosticBag:
    """Collects errors during a pass and raises them together."""

    items: list[Diagnostic] = field(default_factory=list)

    def error(self, code: str, message: str, span: Span = NO_SPAN) -> None:
        self.items.append(error(code, message, span))

    def raise_if_any(self) -> None:
        if self.items:
            raise SpecError(self.items)

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from ..diagnostics import Span, SpecError, error

KEYWORDS = frozenset({
    "import", "input", "output", "constant", "trigger",
    "spawn", "eval", "close", "when", "with", "true", "false",
})

# Longest operators first.
OPERATORS = (
    "**", "&&", "||", "==", "!=", "<=", ">=", ":=",
    "+", "-", "*", "/", "%", "!", "=", "<", ">",
    "(", ")", ",", ".", ":", "@",
)

TIME_UNITS = {
    "ns": Fraction(1),
    "us": Fraction(10**3),
    "ms": Fraction(10**6),
    "s": Fraction(10**9),
    "min": Fraction(60 * 10**9),
    "h": Fraction(3600 * 10**9),
}
FREQUENCY_UNITS = {
    "Hz": Fraction(1),
    "kHz": Fraction(10**3),
    "mHz": Fraction(1, 10**3),
}


@dataclass(frozen=True)
class Token:
    kind: str  # ident | keyword | int | float | string | quantity | op | eof
    text: str
    span: Span
    value: object = None


def _quantity_ns(number: Fraction, unit: str) -> Fraction:
    if unit in TIME_UNITS:
        return number * TIME_UNITS[unit]
    return Fraction(10**9) / (number * FREQUENCY_UNITS[unit])


def tokenize(source: str) -> list[Token]:
    tokens: list[Token] = []
    i, n = 0, len(source)
    while i < n:
        c = source[i]
        if c in " \t\r\n":
            i += 1
            continue
        if source.startswith("//", i):
            j = source.find("\n", i)
            i = n if j < 0 else j
            continue
        if source.startswith("/*", i):
            j = source.find("*/", i + 2)
            if j < 0:
                raise SpecError(error("syntax", "unterminated block comment", Span(i, n)))
            i = j + 2
            continue
        start = i
        if c.isalpha() or c == "_":
            while i < n and (source[i].isalnum() or source[i] == "_"):
                i += 1
            text = source[start:i]
            tokens.append(Token("keyword" if text in KEYWORDS else "ident", text, Span(start, i)))
            continue
        if c.isdigit():
            # Right after a '.', digits are a tuple projection index, never a decimal.
            projection = bool(tokens) and tokens[-1].text == "." and tokens[-1].kind == "op"
            while i < n and source[i].isdigit():
                i += 1
            is_float = False
            if not projection and i + 1 < n and source[i] == "." and source[i + 1].isdigit():
                is_float = True
                i += 1
                while i < n and source[i].isdigit():
                    i += 1
            if not projection and i < n and source[i] in "eE":
                j = i + 1
                if j < n and source[j] in "+-":
                    j += 1
                if j < n and source[j].isdigit():
                    is_float = True
                    i = j
                    while i < n and source[i].isdigit():
                        i += 1
            number_text = source[start:i]
            if not projection and i < n and (source[i].isalpha() or source[i] == "_"):
                j = i
                while j < n and (source[j].isalnum() or source[j] == "_"):
                    j += 1
                unit = source[i:j]
                if unit not in TIME_UNITS and unit not in FREQUENCY_UNITS:
                    raise SpecError(error("syntax", f"unknown unit '{unit}'", Span(start, j)))
                number = Fraction(number_text)
                if unit in FREQUENCY_UNITS and number == 0:
                    raise SpecError(error("frequency", "frequency must be positive", Span(start, j)))
                tokens.append(Token("quantity", source[start:j], Span(start, j),
                                    (unit, _quantity_ns(number, unit))))
                i = j
                continue
            if is_float:
                tokens.append(Token("float", number_text, Span(start, i), float(number_text)))
            else:
                tokens.append(Token("int", number_text, Span(start, i), int(number_text)))
            continue
        if c == '"':
            i += 1
            chars = []
            while True:
                if i >= n:
                    raise SpecError(error("syntax", "unterminated string literal", Span(start, n)))
                ch = source[i]
                if ch == '"':
                    i += 1
                    break
                if ch == "\\":
                    if i + 1 >= n:
                        raise SpecError(error("syntax", "unterminated string literal", Span(start, n)))
                    esc = source[i + 1]
                    mapped = {"n": "\n", "t": "\t", '"': '"', "\\": "\\"}.get(esc)
                    if mapped is None:
                        raise SpecError(error("syntax", f"unknown escape '\\{esc}'", Span(i, i + 2)))
                    chars.append(mapped)
                    i += 2
                    continue
                chars.append(ch)
                i += 1
            tokens.append(Token("string", source[start:i], Span(start, i), "".join(chars)))
            continue
        for op in OPERATORS:
            if source.startswith(op, i):
                i += len(op)
                tokens.append(Token("op", op, Span(start, i)))
                break
        else:
            raise SpecError(error("syntax", f"unexpected character {c!r}", Span(i, i + 1)))
    tokens.append(Token("eof", "", Span(n, n)))
    return tokens

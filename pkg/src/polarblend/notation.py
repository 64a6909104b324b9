"""Slash-separated stacking-sequence notation.

Accepted forms::

    -81/-5/82/-18          plain list, sign attached, spaces ignored
    [0/90/45/-45]_S        symmetric group
    [(+-45)_11]_S          +-a expands to a/-a, (..)_n repeats n times
    [0]x8, [0]×8           repetition with x or ×

Output is always the flat slash-separated integer list.
"""

from __future__ import annotations

from typing import Iterable

from .errors import StackParseError
from .polar import StackingSequence

_PM = ("±", "+-", "-+", "∓")


class _Parser:
    def __init__(self, text: str, line: int, lenient: bool):
        self.text = text
        self.pos = 0
        self.line = line
        self.lenient = lenient

    def error(self, msg: str, pos: int | None = None):
        p = self.pos if pos is None else pos
        raise StackParseError(msg, self.text, p + 1, self.line)

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos] in " \t\r\n":
            self.pos += 1

    def peek(self, n: int = 1) -> str:
        return self.text[self.pos:self.pos + n]

    def parse(self) -> list[int]:
        out = self.seq(closing=None)
        self.skip_ws()
        if self.pos != len(self.text):
            self.error(f"unexpected character {self.text[self.pos]!r}")
        return out

    def seq(self, closing: str | None) -> list[int]:
        out: list[int] = []
        while True:
            self.skip_ws()
            if self.peek() == "/" or self.pos >= len(self.text) or (closing and self.peek() == closing):
                if not self.lenient:
                    self.error("empty ply slot")
            else:
                out.extend(self.item())
            self.skip_ws()
            if self.peek() == "/":
                self.pos += 1
                continue
            return out

    def item(self) -> list[int]:
        plies = self.atom()
        while True:
            self.skip_ws()
            c = self.peek()
            if c == "_":
                self.pos += 1
                if self.peek() in ("S", "s"):
                    self.pos += 1
                    plies = plies + plies[::-1]
                else:
                    plies = plies * self.count()
            elif c in ("x", "×", "X"):
                self.pos += 1
                plies = plies * self.count()
            else:
                return plies

    def count(self) -> int:
        self.skip_ws()
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos].isdigit():
            self.pos += 1
        if start == self.pos:
            self.error("expected repetition count")
        n = int(self.text[start:self.pos])
        if n < 1:
            self.error("repetition count must be >= 1", start)
        return n

    def atom(self) -> list[int]:
        self.skip_ws()
        c = self.peek()
        if c in ("(", "["):
            close = ")" if c == "(" else "]"
            start = self.pos
            self.pos += 1
            inner = self.seq(closing=close)
            self.skip_ws()
            if self.peek() != close:
                self.error(f"unclosed {c!r}", start)
            self.pos += 1
            return inner
        for pm in _PM:
            if self.text.startswith(pm, self.pos):
                self.pos += len(pm)
                a = self.integer(signed=False)
                return [a, -a] if pm in ("±", "+-") else [-a, a]
        return [self.integer(signed=True)]

    def integer(self, signed: bool) -> int:
        self.skip_ws()
        start = self.pos
        if signed and self.peek() in ("-", "+"):
            self.pos += 1
        digits = self.pos
        while self.pos < len(self.text) and self.text[self.pos].isdigit():
            self.pos += 1
        if digits == self.pos:
            self.error("expected an integer ply angle", start)
        value = int(self.text[start:self.pos])
        if not -90 <= value <= 90:
            self.error(f"ply angle {value} outside [-90, 90]", start)
        return value


def parse_stack(text: str, *, line: int = 1, lenient: bool = False) -> StackingSequence:
    """Parse stack notation; ``lenient`` drops empty slots such as ``/ /``."""
    angles = _Parser(text, line, lenient).parse()
    if not angles:
        raise StackParseError("stack has no plies", text, 1, line)
    return StackingSequence(angles)


def format_stack(stack: StackingSequence | Iterable[int]) -> str:
    return "/".join(str(int(a)) for a in stack)

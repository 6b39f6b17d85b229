"""S-expression reading and writing.

Used for the CHC file format, the canonical term rendering, and the
SMT-LIB traffic with the solver process.  An s-expression is either an
atom (``str``) or a ``list`` of s-expressions.
"""

from __future__ import annotations

SExpr = "str | list"


class SExprError(Exception):
    """Malformed s-expression input."""

    def __init__(self, message: str, line: int = 0, column: int = 0) -> None:
        if line:
            message = f"{line}:{column}: {message}"
        super().__init__(message)
        self.line = line
        self.column = column


_ATOM_END = set('() \t\r\n;"')


def parse_all(text: str):
    """Parse every top-level s-expression in *text*."""
    parser = _Parser(text)
    out = []
    while True:
        parser.skip_trivia()
        if parser.at_end():
            return out
        out.append(parser.read())


def parse_one(text: str):
    """Parse exactly one s-expression (trailing trivia allowed)."""
    parser = _Parser(text)
    parser.skip_trivia()
    if parser.at_end():
        raise SExprError("empty input")
    expr = parser.read()
    parser.skip_trivia()
    if not parser.at_end():
        parser.error("trailing input after s-expression")
    return expr


class _Parser:
    def __init__(self, text: str) -> None:
        self.text = text
        self.pos = 0
        self.line = 1
        self.col = 1

    def at_end(self) -> bool:
        return self.pos >= len(self.text)

    def error(self, message: str):
        raise SExprError(message, self.line, self.col)

    def _advance(self, n: int = 1) -> None:
        for _ in range(n):
            if self.text[self.pos] == "\n":
                self.line += 1
                self.col = 1
            else:
                self.col += 1
            self.pos += 1

    def skip_trivia(self) -> None:
        while not self.at_end():
            c = self.text[self.pos]
            if c in " \t\r\n":
                self._advance()
            elif c == ";":
                while not self.at_end() and self.text[self.pos] != "\n":
                    self._advance()
            else:
                return

    def read(self):
        self.skip_trivia()
        if self.at_end():
            self.error("unexpected end of input")
        c = self.text[self.pos]
        if c == "(":
            self._advance()
            items = []
            while True:
                self.skip_trivia()
                if self.at_end():
                    self.error("unclosed '('")
                if self.text[self.pos] == ")":
                    self._advance()
                    return items
                items.append(self.read())
        if c == ")":
            self.error("unexpected ')'")
        if c == '"':
            return self._read_string()
        start = self.pos
        while not self.at_end() and self.text[self.pos] not in _ATOM_END:
            self._advance()
        return self.text[start:self.pos]

    def _read_string(self):
        # SMT-LIB string literal; kept verbatim including quotes.
        start = self.pos
        self._advance()
        while True:
            if self.at_end():
                self.error("unclosed string literal")
            if self.text[self.pos] == '"':
                self._advance()
                if not self.at_end() and self.text[self.pos] == '"':
                    self._advance()
                    continue
                return self.text[start:self.pos]
            self._advance()


def render(expr) -> str:
    """Render an s-expression on a single line."""
    if isinstance(expr, str):
        return expr
    return "(" + " ".join(render(e) for e in expr) + ")"


def render_pretty(expr, width: int = 100, indent: int = 0) -> str:
    """Render with line breaks for human-facing files."""
    flat = render(expr)
    if isinstance(expr, str) or len(flat) + indent <= width:
        return flat
    pad = " " * (indent + 2)
    head = render(expr[0]) if expr else ""
    body = "\n".join(pad + render_pretty(e, width, indent + 2) for e in expr[1:])
    return f"({head}\n{body})"

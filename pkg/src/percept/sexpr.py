"""Minimal S-expression reader and writer.

Shared by the ontology file format, the query language and config files.
Atoms are plain Python: `int`, `float` or `str` (symbols). Quoting with
', " or ` is accepted and stripped, so 'Spatula' and "Spatula" both read
as the symbol Spatula. Commas count as whitespace; `;` starts a line
comment.
"""

from __future__ import annotations

from .errors import QuerySyntaxError

_WHITESPACE = " \t\r\n,"
_QUOTES = "'\"`"
_DELIMS = "()" + _WHITESPACE + ";"


def _atom(token: str):
    try:
        return int(token)
    except ValueError:
        pass
    try:
        return float(token)
    except ValueError:
        pass
    return token


class _Reader:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def error(self, message, expected=None):
        return QuerySyntaxError(message, position=self.pos, expected=expected)

    def _skip_blank(self):
        text, n = self.text, len(self.text)
        while self.pos < n:
            c = text[self.pos]
            if c in _WHITESPACE:
                self.pos += 1
            elif c == ";":
                while self.pos < n and text[self.pos] != "\n":
                    self.pos += 1
            else:
                return

    def at_end(self) -> bool:
        self._skip_blank()
        return self.pos >= len(self.text)

    def read(self):
        self._skip_blank()
        if self.pos >= len(self.text):
            raise self.error("unexpected end of input", expected="expression")
        c = self.text[self.pos]
        if c == "(":
            return self._read_list()
        if c == ")":
            raise self.error("unbalanced ')'")
        if c in _QUOTES:
            return self._read_quoted(c)
        return self._read_token()

    def _read_list(self):
        self.pos += 1  # consume '('
        items = []
        while True:
            self._skip_blank()
            if self.pos >= len(self.text):
                raise self.error("unterminated list", expected="')'")
            if self.text[self.pos] == ")":
                self.pos += 1
                return items
            items.append(self.read())

    def _read_quoted(self, quote):
        self.pos += 1
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos] != quote:
            self.pos += 1
        if self.pos >= len(self.text):
            raise self.error("unterminated quoted symbol", expected=quote)
        token = self.text[start:self.pos]
        self.pos += 1
        return _atom(token) if token else ""

    def _read_token(self):
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos] not in _DELIMS:
            self.pos += 1
        return _atom(self.text[start:self.pos])


def parse(text: str):
    """Read exactly one expression; trailing content is an error."""
    reader = _Reader(text)
    expr = reader.read()
    if not reader.at_end():
        raise reader.error("trailing content after expression")
    return expr


def parse_many(text: str) -> list:
    """Read all top-level expressions from a document."""
    reader = _Reader(text)
    forms = []
    while not reader.at_end():
        forms.append(reader.read())
    return forms


def line_column(text: str, pos: int) -> tuple[int, int]:
    """1-based (line, column) for an offset, for error reporting."""
    prefix = text[:pos]
    line = prefix.count("\n") + 1
    column = pos - (prefix.rfind("\n") + 1) + 1
    return line, column


def format_expr(expr) -> str:
    if isinstance(expr, list):
        return "(" + " ".join(format_expr(e) for e in expr) + ")"
    if isinstance(expr, bool):
        return "1" if expr else "0"
    if isinstance(expr, float):
        return repr(expr)
    return str(expr)

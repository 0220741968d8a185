"""Parser for conjunctive queries written as ``Q(x, y) :- R(x, z), S(z, y).``"""

from __future__ import annotations

import re

from .datamodel import Atom, Query, QueryError

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>\#[^\n]*)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<neck>:-)
  | (?P<punct>[(),.])
    """,
    re.VERBOSE,
)


class QuerySyntaxError(QueryError):
    def __init__(self, msg: str, line: int, col: int):
        self.line, self.col = line, col
        super().__init__(f"line {line}, column {col}: {msg}")


def _tokens(text: str):
    pos, line, col = 0, 1, 1
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise QuerySyntaxError(f"unexpected character {text[pos]!r}", line, col)
        kind, val = m.lastgroup, m.group()
        if kind not in ("ws", "comment"):
            yield kind, val, line, col
        nl = val.count("\n")
        if nl:
            line += nl
            col = len(val) - val.rfind("\n")
        else:
            col += len(val)
        pos = m.end()
    yield "eof", "", line, col


class _Parser:
    def __init__(self, text: str):
        self.toks = list(_tokens(text))
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self, kind: str, val: str | None = None) -> str:
        k, v, line, col = self.toks[self.i]
        if k != kind or (val is not None and v != val):
            want = repr(val) if val is not None else kind
            got = repr(v) if v else "end of input"
            raise QuerySyntaxError(f"expected {want}, got {got}", line, col)
        self.i += 1
        return v

    def atom(self, allow_empty: bool) -> tuple[str, list[str], int, int]:
        _, _, line, col = self.peek()
        name = self.take("ident")
        self.take("punct", "(")
        args = []
        if self.peek()[1] != ")":
            args.append(self.take("ident"))
            while self.peek()[1] == ",":
                self.take("punct", ",")
                args.append(self.take("ident"))
        self.take("punct", ")")
        if not args and not allow_empty:
            raise QuerySyntaxError(f"atom {name} has no variables", line, col)
        return name, args, line, col

    def query(self) -> Query:
        _, head, hline, hcol = self.atom(allow_empty=True)
        self.take("neck")
        body = [self.atom(allow_empty=False)]
        while self.peek()[1] == ",":
            self.take("punct", ",")
            body.append(self.atom(allow_empty=False))
        self.take("punct", ".")
        self.take("eof")
        atoms = []
        for name, args, line, col in body:
            try:
                atoms.append(Atom(name, tuple(args)))
            except QueryError as e:
                raise QuerySyntaxError(str(e), line, col) from None
        try:
            return Query(tuple(head), tuple(atoms))
        except QueryError as e:
            raise QuerySyntaxError(str(e), hline, hcol) from None


def parse_query(text: str) -> Query:
    return _Parser(text).query()

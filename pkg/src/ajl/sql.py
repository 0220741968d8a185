"""Emit a query's semijoin-reduction plan as a script of ANSI SQL statements.

Base tables are referenced positionally (``R AS rhs (i, j)``), so their column
names do not matter. Each semijoin step materializes a temp table through an
``EXISTS`` subquery; the final pass materializes one temp table per binary
join and ends with a plain ``SELECT``. Nothing here executes SQL.
"""

from __future__ import annotations

from .datamodel import Query
from .jointree import JoinTree, build_join_tree, validate_join_tree

MODES = ("three-pass", "two-phase")


def _cols(alias: str, cols) -> str:
    return ", ".join(f"{alias}.{c}" for c in cols)


def _on(cols) -> str:
    return " AND ".join(f"lhs.{c} = rhs.{c}" for c in cols) or "1 = 1"


class _Script:
    def __init__(self, q: Query):
        self.q = q
        self.stmts: list[str] = []
        # current source per atom: (table name, columns)
        self.src = {i: (a.name, a.vars) for i, a in enumerate(q.body)}
        self.joins = 0
        self.used: set[str] = set()

    def ref(self, table: str, cols, alias: str) -> str:
        return f"{table} AS {alias} ({', '.join(cols)})"

    def semijoin(self, target: int, source: int, suffix: str) -> None:
        ttab, tcols = self.src[target]
        stab, scols = self.src[source]
        shared = [c for c in tcols if c in scols]
        base = f"{self.q.body[target].name.lower()}_{target}_{suffix}"
        # a node with several children is reduced once per child
        name, k = base, 1
        while name in self.used:
            k += 1
            name = f"{base}{k}"
        self.used.add(name)
        self.stmts.append(
            f"CREATE TEMP TABLE {name} AS\n"
            f"SELECT DISTINCT {_cols('lhs', tcols)}\n"
            f"FROM {self.ref(ttab, tcols, 'lhs')}\n"
            f"WHERE EXISTS (SELECT 1 FROM {self.ref(stab, scols, 'rhs')} WHERE {_on(shared)});"
        )
        self.src[target] = (name, tcols)

    def join(self, left: tuple, right: tuple, keep, final: bool) -> tuple:
        (ltab, lcols), (rtab, rcols) = left, right
        shared = [c for c in lcols if c in rcols]
        have = list(lcols) + [c for c in rcols if c not in lcols]
        out = list(self.q.head) if final else [c for c in have if c in keep]
        sel = ", ".join(f"lhs.{c}" if c in lcols else f"rhs.{c}" for c in out) or "1 AS nonempty"
        if not out and not final:
            # a table needs at least one column; the marker only records existence
            out = ["nonempty"]
        cond = _on(shared)
        body = (
            f"SELECT DISTINCT {sel}\n"
            f"FROM {self.ref(ltab, lcols, 'lhs')}\n"
            f"JOIN {self.ref(rtab, rcols, 'rhs')} ON {cond}"
        )
        if final:
            self.stmts.append(body + ";")
            return ("", tuple(out))
        self.joins += 1
        name = f"q{self.joins}"
        self.stmts.append(f"CREATE TEMP TABLE {name} AS\n{body};")
        return (name, tuple(out))

    def select_only(self, i: int) -> None:
        tab, cols = self.src[i]
        sel = ", ".join(f"lhs.{c}" for c in self.q.head) or "1 AS nonempty"
        self.stmts.append(f"SELECT DISTINCT {sel}\nFROM {self.ref(tab, cols, 'lhs')};")


def sql_statements(q: Query, t: JoinTree | None = None, mode: str = "three-pass") -> list[str]:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    t = t if t is not None else build_join_tree(q)
    validate_join_tree(q, t)
    s = _Script(q)
    n = len(q.body)
    if n == 1:
        s.select_only(0)
        return s.stmts

    for i in t.postorder():
        for c in t.children(i):
            s.semijoin(i, c, "up")
    if mode == "three-pass":
        for i in t.preorder():
            if t.parent[i] != -1:
                s.semijoin(i, t.parent[i], "down")

    head = set(q.head)
    remaining = n - 1
    if mode == "three-pass":
        results = {}
        for i in t.postorder():
            acc = s.src[i]
            kids = t.children(i)
            p = t.parent[i]
            keep_out = head | (set(q.body[i].vars) & set(q.body[p].vars) if p != -1 else set())
            for k, c in enumerate(kids):
                # later children still join on this atom's variables
                keep = keep_out if k == len(kids) - 1 else keep_out | set(q.body[i].vars)
                remaining -= 1
                acc = s.join(acc, results.pop(c), keep, final=remaining == 0)
            results[i] = acc
    else:
        order = t.preorder()
        acc = s.src[order[0]]
        for k, i in enumerate(order[1:], start=1):
            keep = head.union(*(set(q.body[j].vars) for j in order[k + 1:]))
            remaining -= 1
            acc = s.join(acc, s.src[i], keep, final=remaining == 0)
    return s.stmts


def emit_sql_script(q: Query, t: JoinTree | None = None, mode: str = "three-pass") -> str:
    header = f"-- {mode} semijoin reduction for: {q}\n"
    return header + "\n\n".join(sql_statements(q, t, mode)) + "\n"

"""Relations, queries, cost counters and the exact relational primitives.

Everything in the package works on set-semantics relations: a schema (tuple of
attribute names) plus a frozenset of value tuples. Values are ints or strings.
"""

from __future__ import annotations

import time
from contextlib import contextmanager
from dataclasses import dataclass, field, fields
from typing import Iterable, Iterator, Mapping, Sequence, Union

Value = Union[int, str]
Row = tuple


class SchemaError(ValueError):
    """Unknown attribute, duplicate attribute or arity mismatch."""


class QueryError(ValueError):
    """Malformed query or a database that does not fit the query."""


def value_key(v: Value):
    # ints sort before strings
    if isinstance(v, int):
        return (0, v, "")
    return (1, 0, v)


def row_key(row: Row):
    return tuple(value_key(v) for v in row)


@dataclass(frozen=True)
class Relation:
    schema: tuple[str, ...]
    tuples: frozenset = frozenset()

    def __post_init__(self):
        schema = tuple(self.schema)
        object.__setattr__(self, "schema", schema)
        if len(set(schema)) != len(schema):
            raise SchemaError(f"duplicate attribute in schema {schema}")
        for a in schema:
            if not a:
                raise SchemaError("empty attribute name")
        tuples = self.tuples if isinstance(self.tuples, frozenset) else frozenset(map(tuple, self.tuples))
        n = len(schema)
        for t in tuples:
            if len(t) != n:
                raise SchemaError(f"tuple {t!r} does not match schema {schema}")
        object.__setattr__(self, "tuples", tuples)

    def __len__(self) -> int:
        return len(self.tuples)

    def __iter__(self) -> Iterator[Row]:
        return iter(self.tuples)

    def __repr__(self) -> str:
        rows = sorted(self.tuples, key=row_key)
        return f"Relation({list(self.schema)}, {rows})"

    @property
    def arity(self) -> int:
        return len(self.schema)

    def positions(self, attrs: Sequence[str]) -> tuple[int, ...]:
        try:
            return tuple(self.schema.index(a) for a in attrs)
        except ValueError:
            missing = [a for a in attrs if a not in self.schema]
            raise SchemaError(f"unknown attribute(s) {missing} for schema {self.schema}") from None

    def rename(self, schema: Sequence[str]) -> "Relation":
        if len(schema) != self.arity:
            raise SchemaError(f"cannot rename arity {self.arity} relation to {list(schema)}")
        return Relation(tuple(schema), self.tuples)

    def reorder(self, schema: Sequence[str]) -> "Relation":
        """Same tuple set with columns permuted to ``schema``."""
        if set(schema) != set(self.schema) or len(schema) != self.arity:
            raise SchemaError(f"{list(schema)} is not a permutation of {self.schema}")
        return project(self, schema)

    def sorted_rows(self) -> list[Row]:
        return sorted(self.tuples, key=row_key)


def same_relation(a: Relation, b: Relation) -> bool:
    """Set equality up to column order."""
    if set(a.schema) != set(b.schema) or len(a.schema) != len(b.schema):
        return False
    return a.tuples == b.reorder(a.schema).tuples


@dataclass(frozen=True)
class Atom:
    name: str
    vars: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "vars", tuple(self.vars))
        if len(set(self.vars)) != len(self.vars):
            raise QueryError(f"atom {self.name}{self.vars} repeats a variable; rewrite it first")

    def __str__(self) -> str:
        return f"{self.name}({', '.join(self.vars)})"


@dataclass(frozen=True)
class Query:
    head: tuple[str, ...]
    body: tuple[Atom, ...]

    def __post_init__(self):
        object.__setattr__(self, "head", tuple(self.head))
        object.__setattr__(self, "body", tuple(self.body))
        if not self.body:
            raise QueryError("query has no atoms")
        if len(set(self.head)) != len(self.head):
            raise QueryError(f"repeated head variable in {self.head}")
        known = self.variables
        for v in self.head:
            if v not in known:
                raise QueryError(f"head variable {v!r} does not occur in the body")

    @property
    def variables(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for atom in self.body:
            for v in atom.vars:
                seen.setdefault(v, None)
        return tuple(seen)

    def __len__(self) -> int:
        return len(self.body)

    def __str__(self) -> str:
        return f"Q({', '.join(self.head)}) :- {', '.join(map(str, self.body))}."

    def full(self) -> "Query":
        """The same body with every variable in the head."""
        return Query(self.variables, self.body)


Database = Mapping[str, Relation]


def atom_relations(q: Query, db: Database) -> list[Relation]:
    """Resolve every atom to its base relation, renamed to the atom's variables."""
    out = []
    for atom in q.body:
        if atom.name not in db:
            raise QueryError(f"relation {atom.name!r} not in database")
        rel = db[atom.name]
        if rel.arity != len(atom.vars):
            raise QueryError(
                f"atom {atom} has arity {len(atom.vars)} but relation {atom.name} has arity {rel.arity}"
            )
        out.append(rel.rename(atom.vars))
    return out


COUNTER_FIELDS = (
    "hash_build_inserts",
    "hash_probes",
    "probe_misses",
    "tuples_materialized",
    "semijoin_drops",
    "ttj_deletions",
    "output_tuples",
)


@dataclass
class OpStats:
    """Work counters; their sum is the cost model.

    ``semijoin_ops`` and ``join_ops`` count operator invocations rather than
    tuple work and are kept out of :meth:`total`.
    """

    hash_build_inserts: int = 0
    hash_probes: int = 0
    probe_misses: int = 0
    tuples_materialized: int = 0
    semijoin_drops: int = 0
    ttj_deletions: int = 0
    output_tuples: int = 0
    semijoin_ops: int = 0
    join_ops: int = 0
    phase_ms: dict = field(default_factory=dict)

    def total(self) -> int:
        return sum(getattr(self, f) for f in COUNTER_FIELDS)

    def counters(self) -> dict[str, int]:
        return {f: getattr(self, f) for f in COUNTER_FIELDS if f != "output_tuples"}

    def as_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["phase_ms"] = dict(self.phase_ms)
        return d

    def copy(self) -> "OpStats":
        new = OpStats(**{f.name: getattr(self, f.name) for f in fields(self) if f.name != "phase_ms"})
        new.phase_ms = dict(self.phase_ms)
        return new

    def add(self, other: "OpStats") -> None:
        for f in fields(self):
            if f.name == "phase_ms":
                for k, v in other.phase_ms.items():
                    self.phase_ms[k] = self.phase_ms.get(k, 0.0) + v
            else:
                setattr(self, f.name, getattr(self, f.name) + getattr(other, f.name))

    @contextmanager
    def phase(self, name: str):
        start = time.perf_counter()
        try:
            yield
        finally:
            ms = (time.perf_counter() - start) * 1000.0
            self.phase_ms[name] = self.phase_ms.get(name, 0.0) + ms


def _stats(stats: OpStats | None) -> OpStats:
    return stats if stats is not None else OpStats()


def project(rel: Relation, attrs: Sequence[str]) -> Relation:
    attrs = tuple(attrs)
    if attrs == rel.schema:
        return rel
    pos = rel.positions(attrs)
    return Relation(attrs, frozenset(tuple(t[p] for p in pos) for t in rel.tuples))


def shared_attrs(left: Relation | Sequence[str], right: Relation | Sequence[str]) -> tuple[str, ...]:
    ls = left.schema if isinstance(left, Relation) else tuple(left)
    rs = set(right.schema if isinstance(right, Relation) else right)
    return tuple(a for a in ls if a in rs)


def build_index(rel: Relation, attrs: Sequence[str], stats: OpStats | None = None) -> dict[Row, list[Row]]:
    stats = _stats(stats)
    pos = rel.positions(attrs)
    index: dict[Row, list[Row]] = {}
    for t in rel.tuples:
        index.setdefault(tuple(t[p] for p in pos), []).append(t)
    stats.hash_build_inserts += len(rel)
    return index


def semijoin(left: Relation, right: Relation, stats: OpStats | None = None) -> Relation:
    """Left tuples with a partner in ``right`` on the shared attributes."""
    stats = _stats(stats)
    stats.semijoin_ops += 1
    shared = shared_attrs(left, right)
    if not shared:
        if len(right):
            return left
        stats.semijoin_drops += len(left)
        return Relation(left.schema, frozenset())
    rpos = right.positions(shared)
    keys = {tuple(t[p] for p in rpos) for t in right.tuples}
    stats.hash_build_inserts += len(right)
    lpos = left.positions(shared)
    kept = []
    for t in left.tuples:
        stats.hash_probes += 1
        if tuple(t[p] for p in lpos) in keys:
            kept.append(t)
        else:
            stats.probe_misses += 1
    dropped = len(left) - len(kept)
    if not dropped:
        return left
    stats.semijoin_drops += dropped
    return Relation(left.schema, frozenset(kept))


def natural_join(left: Relation, right: Relation, stats: OpStats | None = None) -> Relation:
    """Hash join: build on ``right``, probe with ``left``."""
    stats = _stats(stats)
    stats.join_ops += 1
    shared = shared_attrs(left, right)
    extra = tuple(a for a in right.schema if a not in shared)
    schema = left.schema + extra
    index = build_index(right, shared, stats)
    lpos = left.positions(shared)
    xpos = right.positions(extra)
    out = set()
    for t in left.tuples:
        stats.hash_probes += 1
        matches = index.get(tuple(t[p] for p in lpos))
        if not matches:
            stats.probe_misses += 1
            continue
        for m in matches:
            out.add(t + tuple(m[p] for p in xpos))
    stats.tuples_materialized += len(out)
    return Relation(schema, frozenset(out))


def _greedy_atom_order(q: Query) -> list[int]:
    order = [0]
    bound = set(q.body[0].vars)
    rest = list(range(1, len(q.body)))
    while rest:
        pick = next((i for i in rest if bound & set(q.body[i].vars)), rest[0])
        rest.remove(pick)
        order.append(pick)
        bound |= set(q.body[pick].vars)
    return order


def oracle_join(q: Query, db: Database, indexed: bool = True) -> Relation:
    """Exact join of all atoms projected onto the head, by backtracking nested loops.

    Atoms are visited in index order, jumping ahead only to avoid cross
    products. With ``indexed`` each level looks up the tuples consistent with
    the variables bound so far; without it every level scans its whole
    relation and checks consistency tuple by tuple.
    """
    rels = atom_relations(q, db)
    order = _greedy_atom_order(q)
    levels = []
    bound: set[str] = set()
    for i in order:
        rel = rels[i]
        check = tuple(v for v in rel.schema if v in bound)
        cpos = rel.positions(check)
        new = tuple((p, v) for p, v in enumerate(rel.schema) if v not in bound)
        if indexed:
            idx: dict = {}
            for t in rel.tuples:
                idx.setdefault(tuple(t[p] for p in cpos), []).append(t)
            levels.append((check, cpos, new, idx, None))
        else:
            levels.append((check, cpos, new, None, list(rel.tuples)))
        bound |= set(rel.schema)

    head = q.head
    out = set()
    env: dict[str, Value] = {}

    def visit(level: int) -> None:
        if level == len(levels):
            out.add(tuple(env[v] for v in head))
            return
        check, cpos, new, idx, scan = levels[level]
        want = tuple(env[v] for v in check)
        if idx is not None:
            candidates = idx.get(want, ())
        else:
            candidates = [t for t in scan if tuple(t[p] for p in cpos) == want]
        for t in candidates:
            for p, v in new:
                env[v] = t[p]
            visit(level + 1)
        for _, v in new:
            env.pop(v, None)

    visit(0)
    return Relation(head, frozenset(out))


def relation(schema: Sequence[str] | str, rows: Iterable[Sequence[Value]]) -> Relation:
    """Shorthand constructor: ``relation("i j", [(1, 2)])``."""
    if isinstance(schema, str):
        schema = schema.replace(",", " ").split()
    return Relation(tuple(schema), frozenset(tuple(r) for r in rows))

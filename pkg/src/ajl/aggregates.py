"""Semiring-annotated evaluation of aggregate queries over join trees."""

from __future__ import annotations

import math
import operator
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

from .datamodel import (
    Database,
    OpStats,
    Query,
    QueryError,
    Relation,
    Row,
    SchemaError,
    atom_relations,
    oracle_join,
    row_key,
)
from .jointree import JoinTree, validate_join_tree


class NotZeroMAError(ValueError):
    """No single atom holds every group-by variable; use ``ya_aggregate``."""


@dataclass(frozen=True)
class Semiring:
    name: str
    zero: Any
    one: Any
    plus: Callable[[Any, Any], Any]
    times: Callable[[Any, Any], Any]


COUNTING = Semiring("count", 0, 1, operator.add, operator.mul)
SUM_PRODUCT = Semiring("sum", 0, 1, operator.add, operator.mul)
MIN_PLUS = Semiring("min", math.inf, 0, min, operator.add)

SEMIRINGS = {s.name: s for s in (COUNTING, SUM_PRODUCT, MIN_PLUS)}


@dataclass
class AnnotatedRelation:
    schema: tuple[str, ...]
    annotations: dict[Row, Any] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.annotations)

    @property
    def relation(self) -> Relation:
        return Relation(self.schema, frozenset(self.annotations))

    def items(self) -> list[tuple[Row, Any]]:
        return sorted(self.annotations.items(), key=lambda kv: row_key(kv[0]))

    def as_dict(self) -> dict[Row, Any]:
        return dict(self.annotations)


def annotate(rel: Relation, s: Semiring, init: str | Callable[[Row], Any] | None = None) -> AnnotatedRelation:
    """Annotate every tuple: ``None`` gives ``s.one``, a name lifts that attribute."""
    if init is None:
        return AnnotatedRelation(rel.schema, {t: s.one for t in rel.tuples})
    if isinstance(init, str):
        if init not in rel.schema:
            raise SchemaError(f"cannot lift {init!r}: not in schema {rel.schema}")
        p = rel.schema.index(init)
        return AnnotatedRelation(rel.schema, {t: t[p] for t in rel.tuples})
    return AnnotatedRelation(rel.schema, {t: init(t) for t in rel.tuples})


@dataclass(frozen=True)
class AggregateSpec:
    """``count``, ``sum:<var>`` or ``min:<var>``."""

    semiring: Semiring
    lift: str | None = None

    @classmethod
    def parse(cls, text: str) -> "AggregateSpec":
        kind, _, var = text.partition(":")
        if kind == "count" and not var:
            return cls(COUNTING)
        if kind in ("sum", "min") and var:
            return cls(SEMIRINGS[kind], var)
        raise ValueError(f"bad aggregate {text!r}; expected count, sum:<var> or min:<var>")

    def lift_atom(self, q: Query) -> int | None:
        if self.lift is None:
            return None
        for i, a in enumerate(q.body):
            if self.lift in a.vars:
                return i
        raise QueryError(f"aggregate variable {self.lift!r} does not occur in the query")


def _annotated_atoms(q: Query, db: Database, s: Semiring, lift: str | None) -> list[AnnotatedRelation]:
    spec = AggregateSpec(s, lift)
    li = spec.lift_atom(q)
    return [annotate(r, s, lift if i == li else None) for i, r in enumerate(atom_relations(q, db))]


def _marginalize(rel: AnnotatedRelation, keep: Sequence[str], s: Semiring, stats: OpStats) -> AnnotatedRelation:
    keep = tuple(keep)
    pos = [rel.schema.index(a) for a in keep]
    out: dict[Row, Any] = {}
    for t, a in rel.annotations.items():
        k = tuple(t[p] for p in pos)
        out[k] = s.plus(out[k], a) if k in out else a
    stats.hash_build_inserts += len(rel)
    return AnnotatedRelation(keep, out)


def _absorb(cur: AnnotatedRelation, msg: AnnotatedRelation, s: Semiring, stats: OpStats) -> AnnotatedRelation:
    """Multiply each tuple by its matching message entries; unmatched tuples go."""
    shared = [a for a in msg.schema if a in cur.schema]
    extra = [a for a in msg.schema if a not in cur.schema]
    mkey = [msg.schema.index(a) for a in shared]
    mext = [msg.schema.index(a) for a in extra]
    index: dict[Row, list] = {}
    for t, a in msg.annotations.items():
        index.setdefault(tuple(t[p] for p in mkey), []).append((tuple(t[p] for p in mext), a))
    stats.hash_build_inserts += len(msg)
    if extra:
        stats.join_ops += 1
    else:
        stats.semijoin_ops += 1
    ckey = [cur.schema.index(a) for a in shared]
    out: dict[Row, Any] = {}
    for t, a in cur.annotations.items():
        stats.hash_probes += 1
        bucket = index.get(tuple(t[p] for p in ckey))
        if not bucket:
            stats.probe_misses += 1
            stats.semijoin_drops += 1
            continue
        if not extra:
            out[t] = s.times(a, bucket[0][1])
            continue
        for ext, b in bucket:
            out[t + ext] = s.times(a, b)
        stats.tuples_materialized += len(bucket)
    return AnnotatedRelation(cur.schema + tuple(extra), out)


def _check_groupby(q: Query, groupby: Sequence[str]) -> tuple[str, ...]:
    groupby = tuple(groupby)
    bad = [v for v in groupby if v not in q.head]
    if bad:
        raise QueryError(f"group-by variables {bad} are not in the head {q.head}")
    return groupby


def _aggregate_pass(
    q: Query, db: Database, t: JoinTree, s: Semiring, groupby: tuple[str, ...], stats: OpStats, lift: str | None
) -> AnnotatedRelation:
    group = set(groupby)
    rels = _annotated_atoms(q, db, s, lift)
    messages: dict[int, AnnotatedRelation] = {}
    with stats.phase("reduce"):
        for i in t.postorder():
            cur = rels[i]
            for c in t.children(i):
                cur = _absorb(cur, messages.pop(c), s, stats)
            p = t.parent[i]
            if p == -1:
                root = cur
                continue
            shared = [v for v in cur.schema if v in q.body[p].vars]
            keep = shared + [v for v in cur.schema if v in group and v not in shared]
            messages[i] = _marginalize(cur, keep, s, stats)
    with stats.phase("aggregate"):
        out = _marginalize(root, groupby, s, stats)
    stats.output_tuples += len(out)
    return out


def ya_aggregate(
    q: Query,
    db: Database,
    t: JoinTree,
    s: Semiring,
    groupby: Sequence[str],
    stats: OpStats | None = None,
    lift: str | None = None,
) -> AnnotatedRelation:
    """One bottom-up pass carrying annotations, then a group-by at the root.

    Messages sent up the tree keep the variables shared with the parent plus
    any group-by variables from the subtree; when a message carries the
    latter the parent is joined with it instead of semijoined.
    """
    stats = stats if stats is not None else OpStats()
    groupby = _check_groupby(q, groupby)
    validate_join_tree(q, t)
    return _aggregate_pass(q, db, t, s, groupby, stats, lift)


def dominating_atom(q: Query, groupby: Sequence[str]) -> int | None:
    """Lowest-index atom whose variables include every group-by variable."""
    g = set(groupby)
    return next((i for i, a in enumerate(q.body) if g <= set(a.vars)), None)


def zero_ma_aggregate(
    q: Query,
    db: Database,
    t: JoinTree,
    s: Semiring,
    groupby: Sequence[str],
    stats: OpStats | None = None,
    lift: str | None = None,
) -> AnnotatedRelation:
    """Aggregate on the filtered dominating atom, with no join phase at all."""
    stats = stats if stats is not None else OpStats()
    groupby = _check_groupby(q, groupby)
    validate_join_tree(q, t)
    d = dominating_atom(q, groupby)
    if d is None:
        raise NotZeroMAError(f"no atom contains all of {list(groupby)}; fall back to ya_aggregate")
    before = stats.join_ops
    out = _aggregate_pass(q, db, t.reroot(d), s, groupby, stats, lift)
    # group-by variables below the root always travel as shared keys
    assert stats.join_ops == before
    return out


def oracle_aggregate(
    q: Query, db: Database, s: Semiring, groupby: Sequence[str], lift: str | None = None
) -> AnnotatedRelation:
    """Aggregate straight over the full join of all atoms."""
    groupby = tuple(groupby)
    full = oracle_join(q.full(), db)
    rels = _annotated_atoms(q, db, s, lift)
    pos = [[full.schema.index(v) for v in a.vars] for a in q.body]
    gpos = [full.schema.index(v) for v in groupby]
    out: dict[Row, Any] = {}
    for t in full.tuples:
        a = s.one
        for r, ps in zip(rels, pos):
            a = s.times(a, r.annotations[tuple(t[p] for p in ps)])
        k = tuple(t[p] for p in gpos)
        out[k] = s.plus(out[k], a) if k in out else a
    return AnnotatedRelation(groupby, out)

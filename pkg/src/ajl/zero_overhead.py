"""Baseline hash-join plans and the two zero-overhead evaluators.

Cost conventions shared by every evaluator here:

* one hash table per non-scan atom, built over that atom's base tuples and keyed
  on the variables it shares with its plan parent (its join-tree neighbour that
  comes earlier in the plan);
* one probe per lookup, one miss per empty lookup;
* one materialized tuple per partial or final join tuple produced.

A left-deep plan ``((a0 ⋈ a1) ⋈ a2) ...`` scans ``a0`` and pipelines through
the tables. A right-deep plan ``a0 ⋈ (a1 ⋈ (... ⋈ an))`` scans its deepest
atom, which is the join-tree root, and materializes each level before moving
up; its build sides are the base atoms ``a0 .. a(n-1)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

from .datamodel import (
    Database,
    OpStats,
    Query,
    Relation,
    Row,
    atom_relations,
    project,
    row_key,
    shared_attrs,
)
from .jointree import JoinTree, JoinTreeError, plan_parents, validate_join_tree

LEFT_DEEP = "left-deep"
RIGHT_DEEP = "right-deep"


@dataclass(frozen=True)
class PlanStep:
    atom: int
    parent: int
    keys: tuple[str, ...]


@dataclass(frozen=True)
class Plan:
    """A binary hash-join plan derived from a join tree.

    ``atoms`` is the plan as written (outermost first for right-deep plans);
    ``scan`` is the probe-side base atom and ``steps`` the build sides in
    execution order, each with the atom supplying its probe key.
    """

    shape: str
    query: Query
    tree: JoinTree
    atoms: tuple[int, ...]
    scan: int
    steps: tuple[PlanStep, ...]

    @property
    def order(self) -> list[int]:
        """Execution order: the scan atom, then every build side."""
        return [self.scan] + [s.atom for s in self.steps]

    def describe(self) -> str:
        names = [self.query.body[i].name for i in self.atoms]
        if len(names) == 1:
            return names[0]
        if self.shape == LEFT_DEEP:
            expr = names[0]
            for n in names[1:]:
                expr = f"({expr} ⋈ {n})"
            return expr
        expr = names[-1]
        for n in reversed(names[:-1]):
            expr = f"({n} ⋈ {expr})"
        return expr


def _steps(q: Query, t: JoinTree, order: Sequence[int]) -> tuple[PlanStep, ...]:
    parents = plan_parents(t, order)
    return tuple(
        PlanStep(a, parents[a], shared_attrs(q.body[a].vars, q.body[parents[a]].vars)) for a in order[1:]
    )


def left_deep_plan(q: Query, t: JoinTree, order: Sequence[int] | None = None) -> Plan:
    """Left-deep plan over a monotone order of ``t`` (default: breadth-first)."""
    validate_join_tree(q, t)
    order = list(order) if order is not None else t.preorder()
    return Plan(LEFT_DEEP, q, t, tuple(order), order[0], _steps(q, t, order))


def right_deep_plan(q: Query, t: JoinTree, order: Sequence[int] | None = None) -> Plan:
    """Right-deep plan whose deepest atom is the root of ``t``.

    ``order`` is a monotone order starting at the root; the plan reads it
    backwards, so every suffix of the written plan is connected.
    """
    validate_join_tree(q, t)
    order = list(order) if order is not None else t.preorder()
    if order[0] != t.root:
        raise JoinTreeError(f"right-deep order must start at the tree root {t.root}, got {order}")
    return Plan(RIGHT_DEEP, q, t, tuple(reversed(order)), order[0], _steps(q, t, order))


class _Prepared:
    """Base relations, hash tables and key positions for a plan."""

    def __init__(self, p: Plan, db: Database, stats: OpStats, bucket=list):
        self.rels = atom_relations(p.query, db)
        self.tables: dict[int, dict] = {}
        self.ppos: dict[int, tuple[int, ...]] = {}
        for s in p.steps:
            rel = self.rels[s.atom]
            pos = rel.positions(s.keys)
            table: dict = {}
            rows = sorted(rel.tuples, key=row_key)
            if bucket is list:
                for tup in rows:
                    table.setdefault(tuple(tup[i] for i in pos), []).append(tup)
            else:
                for tup in rows:
                    table.setdefault(tuple(tup[i] for i in pos), {})[tup] = None
            stats.hash_build_inserts += len(rel)
            self.tables[s.atom] = table
            self.ppos[s.atom] = self.rels[s.parent].positions(s.keys)
        # where each head variable is read from: first atom in execution order holding it
        self.head_src = []
        for v in p.query.head:
            a = next(a for a in p.order if v in p.query.body[a].vars)
            self.head_src.append((a, p.query.body[a].vars.index(v)))


def _scan_rows(rel: Relation) -> list[Row]:
    # a fixed scan order keeps counters reproducible across processes
    return sorted(rel.tuples, key=row_key)


def hash_join_plan(p: Plan, db: Database, stats: OpStats | None = None) -> Relation:
    """Build every table, then push the scan atom's tuples through the probes."""
    stats = stats if stats is not None else OpStats()
    prep = _Prepared(p, db, stats)
    n = len(p.query.body)
    out: set = set()
    if p.shape == LEFT_DEEP:
        cur: list = [None] * n
        steps = p.steps

        def visit(k: int) -> None:
            if k == len(steps):
                out.add(tuple(cur[a][i] for a, i in prep.head_src))
                return
            s = steps[k]
            parent_tup = cur[s.parent]
            stats.hash_probes += 1
            bucket = prep.tables[s.atom].get(tuple(parent_tup[i] for i in prep.ppos[s.atom]))
            if not bucket:
                stats.probe_misses += 1
                return
            for tup in bucket:
                stats.tuples_materialized += 1
                cur[s.atom] = tup
                visit(k + 1)

        for tup in _scan_rows(prep.rels[p.scan]):
            cur[p.scan] = tup
            visit(0)
    else:
        slot = {a: k for k, a in enumerate(p.order)}
        partials = [(tup,) for tup in _scan_rows(prep.rels[p.scan])]
        for s in p.steps:
            table, ppos, ps = prep.tables[s.atom], prep.ppos[s.atom], slot[s.parent]
            nxt = []
            for part in partials:
                stats.hash_probes += 1
                bucket = table.get(tuple(part[ps][i] for i in ppos))
                if not bucket:
                    stats.probe_misses += 1
                    continue
                for tup in bucket:
                    nxt.append(part + (tup,))
                stats.tuples_materialized += len(bucket)
            partials = nxt
        src = [(slot[a], i) for a, i in prep.head_src]
        out = {tuple(part[k][i] for k, i in src) for part in partials}
    stats.output_tuples += len(out)
    return Relation(p.query.head, frozenset(out))


def ttj(p: Plan, db: Database, stats: OpStats | None = None) -> Relation:
    """TreeTracker join over a left-deep plan.

    Runs the same pipelined probes as :func:`hash_join_plan`. When a lookup
    fails, the plan parent of the failing atom supplied the key, so its
    current tuple can never join: it is deleted from its working table and
    execution backjumps to that atom's iterator. A bucket emptied by deletions
    counts as a failed lookup for the tuple that probed it.
    """
    if p.shape != LEFT_DEEP:
        raise JoinTreeError("TreeTracker join needs a left-deep plan")
    stats = stats if stats is not None else OpStats()
    prep = _Prepared(p, db, stats, bucket=dict)
    n = len(p.query.body)
    steps = p.steps
    level = {s.atom: k for k, s in enumerate(steps)}
    level[p.scan] = -1
    cur: list = [None] * n
    out: set = set()

    # returns None to carry on, or the level whose current tuple must go
    def visit(k: int):
        if k == len(steps):
            out.add(tuple(cur[a][i] for a, i in prep.head_src))
            return None
        s = steps[k]
        guilty = level[s.parent]
        table = prep.tables[s.atom]
        key = tuple(cur[s.parent][i] for i in prep.ppos[s.atom])
        stats.hash_probes += 1
        bucket = table.get(key)
        if not bucket:
            stats.probe_misses += 1
            return guilty
        for tup in list(bucket):
            stats.tuples_materialized += 1
            cur[s.atom] = tup
            g = visit(k + 1)
            if g is None:
                continue
            if g == k:
                del bucket[tup]
                stats.ttj_deletions += 1
                continue
            return g
        if not bucket:
            del table[key]
            return guilty
        return None

    scan = _scan_rows(prep.rels[p.scan])
    for tup in scan:
        cur[p.scan] = tup
        if visit(0) == -1:
            stats.ttj_deletions += 1
    stats.output_tuples += len(out)
    return Relation(p.query.head, frozenset(out))


class NestedRow:
    __slots__ = ("values", "blocks")

    def __init__(self, values: Row, blocks: tuple = ()):
        self.values = values
        self.blocks = blocks

    def __repr__(self) -> str:
        return f"NestedRow({self.values!r}, {[len(b) for b in self.blocks]})"


@dataclass
class NestedRelation:
    """Tuples of one atom, each with one block of matches per nested child.

    ``index`` (when present) maps the ``key_attrs`` projection of a row to the
    rows carrying it; a parent probes it during a nested semijoin.
    """

    schema: tuple[str, ...]
    rows: list[NestedRow]
    children: tuple["NestedRelation", ...] = ()
    key_attrs: tuple[str, ...] | None = None
    index: dict | None = None

    @classmethod
    def from_relation(cls, rel: Relation) -> "NestedRelation":
        return cls(rel.schema, [NestedRow(t) for t in sorted(rel.tuples, key=row_key)])

    def __len__(self) -> int:
        return len(self.rows)

    def flat_schema(self) -> tuple[str, ...]:
        schema = list(self.schema)
        for c in self.children:
            schema += [a for a in c.flat_schema() if a not in schema]
        return tuple(schema)

    def with_index(self, attrs: Sequence[str], stats: OpStats | None = None) -> "NestedRelation":
        attrs = tuple(attrs)
        pos = [self.schema.index(a) for a in attrs]
        index: dict = {}
        for r in self.rows:
            index.setdefault(tuple(r.values[i] for i in pos), []).append(r)
        if stats is not None:
            stats.hash_build_inserts += len(self.rows)
        return NestedRelation(self.schema, self.rows, self.children, attrs, index)


def nested_semijoin(
    parent: Relation | NestedRelation, child: Relation | NestedRelation, stats: OpStats | None = None
) -> NestedRelation:
    """Keep each parent row that has matches in ``child`` and attach the match block."""
    stats = stats if stats is not None else OpStats()
    if isinstance(parent, Relation):
        parent = NestedRelation.from_relation(parent)
    if isinstance(child, Relation):
        child = NestedRelation.from_relation(child)
    keys = tuple(a for a in parent.schema if a in child.schema)
    if child.index is None or set(child.key_attrs) != set(keys):
        child = child.with_index(keys, stats)
    ppos = [parent.schema.index(a) for a in child.key_attrs]
    stats.semijoin_ops += 1
    kept: list[NestedRow] = []
    remap: dict[int, NestedRow] = {}
    for r in parent.rows:
        stats.hash_probes += 1
        block = child.index.get(tuple(r.values[i] for i in ppos))
        if not block:
            stats.probe_misses += 1
            continue
        nr = NestedRow(r.values, r.blocks + (block,))
        kept.append(nr)
        remap[id(r)] = nr
    stats.semijoin_drops += len(parent.rows) - len(kept)
    index = None
    if parent.index is not None:
        # the parent's own table shrinks in place; nothing is re-inserted
        index = {}
        for k, rows in parent.index.items():
            live = [remap[id(r)] for r in rows if id(r) in remap]
            if live:
                index[k] = live
    return NestedRelation(parent.schema, kept, parent.children + (child,), parent.key_attrs, index)


def _expand(nr: NestedRelation, row: NestedRow) -> Iterator[Row]:
    partials: list[Row] = [row.values]
    acc = list(nr.schema)
    for slot, c in enumerate(nr.children):
        block = row.blocks[slot] if slot < len(row.blocks) else None
        if not block:
            raise RuntimeError(f"nested row {row.values!r} has an empty or missing match block")
        cschema = c.flat_schema()
        extra = [i for i, a in enumerate(cschema) if a not in acc]
        acc += [cschema[i] for i in extra]
        nxt = []
        for crow in block:
            for ct in _expand(c, crow):
                tail = tuple(ct[i] for i in extra)
                nxt.extend(p + tail for p in partials)
        partials = nxt
    return iter(partials)


def unnest(n: NestedRelation, stats: OpStats | None = None) -> Relation:
    """Expand every root row against its match blocks, recursively."""
    stats = stats if stats is not None else OpStats()
    out = set()
    for row in n.rows:
        for t in _expand(n, row):
            out.add(t)
            stats.tuples_materialized += 1
    return Relation(n.flat_schema(), frozenset(out))


def nested_ya(q: Query, db: Database, t: JoinTree, stats: OpStats | None = None) -> Relation:
    """Nested semijoins from the leaves up, then one unnest at the root.

    Each non-root atom's table is built over its base tuples and shrinks as
    its own nested semijoins drop rows, so the build work is exactly that of
    the right-deep hash join over the same tree.
    """
    stats = stats if stats is not None else OpStats()
    validate_join_tree(q, t)
    rels = atom_relations(q, db)
    nodes: dict[int, NestedRelation] = {}
    with stats.phase("reduce"):
        for i in t.postorder():
            nr = NestedRelation.from_relation(rels[i])
            p = t.parent[i]
            if p != -1:
                nr = nr.with_index(shared_attrs(q.body[i].vars, q.body[p].vars), stats)
            for c in t.children(i):
                nr = nested_semijoin(nr, nodes.pop(c), stats)
            nodes[i] = nr
    with stats.phase("join"):
        flat = unnest(nodes[t.root], stats)
        out = project(flat, q.head)
    stats.output_tuples += len(out)
    return out

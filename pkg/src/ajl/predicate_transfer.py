"""Bloom filters and the predicate-transfer pre-filtering pipelines (PT and RPT)."""

from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .datamodel import (
    Atom,
    Database,
    OpStats,
    Query,
    Relation,
    Row,
    SchemaError,
    atom_relations,
    project,
)
from .jointree import JoinTree, JoinTreeError, build_join_tree, monotone_orders, plan_parents
from .zero_overhead import hash_join_plan, left_deep_plan

DEFAULT_BITS_PER_KEY = 8
DEFAULT_HASHES = 6


def _encode(key: Row) -> bytes:
    parts = []
    for v in key:
        if isinstance(v, int):
            b = v.to_bytes(v.bit_length() // 8 + 1, "little", signed=True)
            parts.append(b"i" + struct.pack("<I", len(b)) + b)
        else:
            b = v.encode("utf-8")
            parts.append(b"s" + struct.pack("<I", len(b)) + b)
    return b"".join(parts)


def _hash_pair(key: Row, seed: int) -> tuple[int, int]:
    digest = hashlib.blake2b(
        _encode(key), digest_size=16, key=struct.pack("<Q", seed & 0xFFFFFFFFFFFFFFFF)
    ).digest()
    h1, h2 = struct.unpack("<QQ", digest)
    return h1, h2 | 1


def next_pow2(n: int) -> int:
    return 1 if n <= 1 else 1 << (n - 1).bit_length()


@dataclass
class BloomFilter:
    m: int
    k: int
    seed: int = 0
    arity: int | None = None
    bits: bytearray = field(default=None, repr=False)

    def __post_init__(self):
        if self.m < 1 or self.k < 1:
            raise ValueError(f"need m, k >= 1, got m={self.m}, k={self.k}")
        if self.m & (self.m - 1):
            raise ValueError(f"m must be a power of two, got {self.m}")
        if self.bits is None:
            self.bits = bytearray((self.m + 7) // 8)

    def _positions(self, key: Row) -> list[int]:
        h1, h2 = _hash_pair(key, self.seed)
        mask = self.m - 1
        return [(h1 + i * h2) & mask for i in range(self.k)]

    def _check(self, key: Row) -> None:
        if self.arity is None:
            self.arity = len(key)
        elif len(key) != self.arity:
            raise SchemaError(f"key arity {len(key)} does not match filter arity {self.arity}")

    def add(self, key: Row) -> None:
        key = tuple(key)
        self._check(key)
        for p in self._positions(key):
            self.bits[p >> 3] |= 1 << (p & 7)

    def __contains__(self, key: Row) -> bool:
        key = tuple(key)
        self._check(key)
        bits = self.bits
        return all(bits[p >> 3] >> (p & 7) & 1 for p in self._positions(key))

    def fill(self) -> None:
        """Set every bit; the filter then admits everything."""
        for i in range(len(self.bits)):
            self.bits[i] = 0xFF

    def expected_fpr(self, n: int) -> float:
        return (1.0 - math.exp(-self.k * n / self.m)) ** self.k


@dataclass(frozen=True)
class BloomParams:
    bits_per_key: int = DEFAULT_BITS_PER_KEY
    hashes: int = DEFAULT_HASHES
    seed: int = 0

    def size_for(self, n: int) -> int:
        return next_pow2(self.bits_per_key * max(n, 1))


def bloom_build(
    rel: Relation, attrs: Sequence[str], m: int, k: int, seed: int = 0, stats: OpStats | None = None
) -> BloomFilter:
    pos = rel.positions(attrs)
    f = BloomFilter(m, k, seed, arity=len(pos))
    for t in rel.tuples:
        f.add(tuple(t[p] for p in pos))
    if stats is not None:
        stats.hash_build_inserts += len(rel)
    return f


def bloom_probe(f: BloomFilter, key: Row) -> bool:
    return key in f


def bloom_filter_relation(
    rel: Relation, attrs: Sequence[str], f: BloomFilter, stats: OpStats | None = None
) -> Relation:
    """Tuples of ``rel`` whose ``attrs`` projection passes ``f``."""
    pos = rel.positions(attrs)
    if f.arity is not None and len(pos) != f.arity:
        raise SchemaError(f"{len(pos)} key attributes against a filter of arity {f.arity}")
    kept = []
    for t in rel.tuples:
        if tuple(t[p] for p in pos) in f:
            kept.append(t)
        elif stats is not None:
            stats.probe_misses += 1
    if stats is not None:
        stats.hash_probes += len(rel)
        stats.semijoin_drops += len(rel) - len(kept)
        stats.semijoin_ops += 1
    if len(kept) == len(rel):
        return rel
    return Relation(rel.schema, frozenset(kept))


@dataclass(frozen=True)
class Transfer:
    source: int
    target: int
    attrs: tuple[str, ...]


@dataclass(frozen=True)
class TransferSchedule:
    forward: tuple[Transfer, ...]
    backward: tuple[Transfer, ...]

    @classmethod
    def from_forward(cls, q: Query, pairs: Iterable[tuple[int, int]]) -> "TransferSchedule":
        fwd = []
        for s, t in pairs:
            shared = tuple(v for v in q.body[s].vars if v in q.body[t].vars)
            if not shared:
                raise JoinTreeError(f"transfer {q.body[s]} -> {q.body[t]} shares no variables")
            fwd.append(Transfer(s, t, shared))
        bwd = tuple(Transfer(x.target, x.source, x.attrs) for x in reversed(fwd))
        return cls(tuple(fwd), bwd)

    def transfers(self) -> tuple[Transfer, ...]:
        return self.forward + self.backward


def _linked(q: Query, a: int, b: int) -> bool:
    # tree edges between variable-disjoint atoms (cross products) carry no filter
    return bool(set(q.body[a].vars) & set(q.body[b].vars))


def tree_schedule(q: Query, t: JoinTree) -> TransferSchedule:
    """Leaves to root, then root to leaves along ``t``."""
    pairs = [(c, t.parent[c]) for c in t.postorder() if t.parent[c] != -1 and _linked(q, c, t.parent[c])]
    return TransferSchedule.from_forward(q, pairs)


def small_to_large_schedule(q: Query, db: Database, t: JoinTree | None = None) -> TransferSchedule:
    """Join-tree edges directed from the smaller endpoint to the larger one.

    Atoms are ranked by cardinality (ties by index) and transfers fire in rank
    order of their source, so each atom has received all of its incoming
    filters before it sends its own.
    """
    t = t if t is not None else build_join_tree(q)
    sizes = [len(r) for r in atom_relations(q, db)]
    rank = {a: r for r, a in enumerate(sorted(range(len(q.body)), key=lambda i: (sizes[i], i)))}
    pairs = []
    for p, c in t.edges():
        if not _linked(q, p, c):
            continue
        pairs.append((p, c) if rank[p] < rank[c] else (c, p))
    pairs.sort(key=lambda e: (rank[e[0]], rank[e[1]]))
    return TransferSchedule.from_forward(q, pairs)


def _transfer_rels(
    q: Query, rels: list[Relation], sched: TransferSchedule, params: BloomParams, stats: OpStats
) -> list[Relation]:
    rels = list(rels)
    for x in sched.transfers():
        src = project(rels[x.source], x.attrs)
        f = bloom_build(src, x.attrs, params.size_for(len(src)), params.hashes, params.seed, stats)
        rels[x.target] = bloom_filter_relation(rels[x.target], x.attrs, f, stats)
    return rels


def predicate_transfer(
    q: Query,
    db: Database,
    sched: TransferSchedule | None = None,
    params: BloomParams | None = None,
    stats: OpStats | None = None,
) -> dict[str, Relation]:
    """Run the forward then backward transfers; returns the filtered database.

    The result is keyed by atom position (``"#0"``, ``"#1"``, ...) so that two
    atoms over the same base relation are filtered independently.
    """
    params = params or BloomParams()
    stats = stats if stats is not None else OpStats()
    sched = sched if sched is not None else small_to_large_schedule(q, db)
    rels = _transfer_rels(q, atom_relations(q, db), sched, params, stats)
    return {f"#{i}": r for i, r in enumerate(rels)}


def positional_query(q: Query) -> Query:
    """``q`` with atom ``i`` renamed to ``#i``, matching :func:`predicate_transfer` output."""
    return Query(q.head, tuple(Atom(f"#{i}", a.vars) for i, a in enumerate(q.body)))


def pt(q: Query, db: Database, params: BloomParams | None = None, stats: OpStats | None = None) -> Relation:
    """Small-to-large predicate transfer, then a left-deep hash join."""
    stats = stats if stats is not None else OpStats()
    t = build_join_tree(q)
    with stats.phase("reduce"):
        filtered = predicate_transfer(q, db, small_to_large_schedule(q, db, t), params, stats)
    with stats.phase("join"):
        return hash_join_plan(left_deep_plan(positional_query(q), t, t.preorder()), filtered, stats)


def select_rpt_root(
    q: Query, db: Database, params: BloomParams | None = None, stats: OpStats | None = None
) -> tuple[JoinTree, list[Relation]]:
    """Try every root of the join-tree shape; keep the one leaving the fewest tuples.

    Ties go to the lowest atom index. Returns the rooted tree and the relations
    after its two Bloom passes.
    """
    params = params or BloomParams()
    stats = stats if stats is not None else OpStats()
    shape = build_join_tree(q)
    base = atom_relations(q, db)
    best = None
    for r in range(len(q.body)):
        t = shape.reroot(r)
        rels = _transfer_rels(q, base, tree_schedule(q, t), params, stats)
        total = sum(len(x) for x in rels)
        if best is None or total < best[0]:
            best = (total, t, rels)
    return best[1], best[2]


def rpt_orders(
    q: Query,
    db: Database,
    params: BloomParams | None = None,
    orders: Sequence[Sequence[int]] | None = None,
) -> tuple[JoinTree, dict[tuple[int, ...], tuple[Relation, OpStats]]]:
    """One RPT reduction, then the join phase under each monotone order.

    Each order's stats include the shared reduction work.
    """
    reduce_stats = OpStats()
    with reduce_stats.phase("reduce"):
        t, rels = select_rpt_root(q, db, params, reduce_stats)
    pq = positional_query(q)
    filtered = {f"#{i}": r for i, r in enumerate(rels)}
    out = {}
    for o in orders if orders is not None else monotone_orders(t):
        st = reduce_stats.copy()
        with st.phase("join"):
            res = hash_join_plan(left_deep_plan(pq, t, o), filtered, st)
        out[tuple(o)] = (res, st)
    return t, out


def rpt(
    q: Query,
    db: Database,
    params: BloomParams | None = None,
    stats: OpStats | None = None,
    order: Sequence[int] | None = None,
) -> Relation:
    stats = stats if stats is not None else OpStats()
    with stats.phase("reduce"):
        t, rels = select_rpt_root(q, db, params, stats)
    order = list(order) if order is not None else t.preorder()
    plan_parents(t, order)  # rejects non-monotone orders
    filtered = {f"#{i}": r for i, r in enumerate(rels)}
    with stats.phase("join"):
        return hash_join_plan(left_deep_plan(positional_query(q), t, order), filtered, stats)

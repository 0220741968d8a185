"""Semijoin-reduction evaluation along a join tree.

``ya_classic`` does the bottom-up and top-down semijoin passes and then joins
bottom-up; ``ya_two_phase`` drops the top-down pass and joins root-first in a
monotone order; ``ya_plus_select`` picks the tree whose bottom-up pass leaves
the fewest tuples.
"""

from __future__ import annotations

from typing import Sequence

from .datamodel import (
    Database,
    OpStats,
    Query,
    Relation,
    atom_relations,
    natural_join,
    project,
    semijoin,
)
from .jointree import (
    DEFAULT_ENUM_LIMIT,
    JoinTree,
    JoinTreeError,
    build_join_tree,
    enumerate_join_trees,
    is_monotone_order,
    validate_join_tree,
)


def bottom_up_pass(rels: list[Relation], t: JoinTree, stats: OpStats) -> list[Relation]:
    rels = list(rels)
    for i in t.postorder():
        for c in t.children(i):
            rels[i] = semijoin(rels[i], rels[c], stats)
    return rels


def top_down_pass(rels: list[Relation], t: JoinTree, stats: OpStats) -> list[Relation]:
    rels = list(rels)
    for i in t.preorder():
        p = t.parent[i]
        if p != -1:
            rels[i] = semijoin(rels[i], rels[p], stats)
    return rels


def full_reduce(q: Query, db: Database, t: JoinTree, stats: OpStats | None = None) -> list[Relation]:
    """Both semijoin passes; every surviving tuple takes part in some output tuple."""
    stats = stats if stats is not None else OpStats()
    validate_join_tree(q, t)
    rels = atom_relations(q, db)
    rels = bottom_up_pass(rels, t, stats)
    return top_down_pass(rels, t, stats)


def _keep_attrs(q: Query, t: JoinTree, i: int) -> set[str]:
    # head variables plus whatever the subtree at i shares with the rest
    keep = set(q.head)
    p = t.parent[i]
    if p != -1:
        keep |= set(q.body[i].vars) & set(q.body[p].vars)
    return keep


def _join_bottom_up(q: Query, rels: list[Relation], t: JoinTree, stats: OpStats) -> Relation:
    results: dict[int, Relation] = {}
    for i in t.postorder():
        acc = rels[i]
        for c in t.children(i):
            acc = natural_join(acc, results.pop(c), stats)
        keep = _keep_attrs(q, t, i)
        results[i] = project(acc, [a for a in acc.schema if a in keep])
    return results[t.root]


def _finish(q: Query, rel: Relation, stats: OpStats) -> Relation:
    out = project(rel, q.head)
    stats.output_tuples += len(out)
    return out


def ya_classic(q: Query, db: Database, t: JoinTree, stats: OpStats | None = None) -> Relation:
    stats = stats if stats is not None else OpStats()
    with stats.phase("reduce"):
        rels = full_reduce(q, db, t, stats)
    with stats.phase("join"):
        out = _join_bottom_up(q, rels, t, stats)
        return _finish(q, out, stats)


def check_two_phase_order(t: JoinTree, order: Sequence[int]) -> None:
    order = list(order)
    if not is_monotone_order(t, order):
        raise JoinTreeError(f"join order {order} is not monotone for tree {t.to_json()}")
    if order[0] != t.root:
        raise JoinTreeError(f"two-phase join order must start at the root {t.root}, got {order}")


def join_in_order(q: Query, rels: list[Relation], order: Sequence[int], stats: OpStats) -> Relation:
    """Join atoms left to right, keeping only head variables and those still needed."""
    acc = rels[order[0]]
    for k, i in enumerate(order[1:], start=1):
        acc = natural_join(acc, rels[i], stats)
        keep = set(q.head)
        for j in order[k + 1:]:
            keep |= set(q.body[j].vars)
        acc = project(acc, [a for a in acc.schema if a in keep])
    return acc


def ya_two_phase(
    q: Query, db: Database, t: JoinTree, order: Sequence[int] | None = None, stats: OpStats | None = None
) -> Relation:
    stats = stats if stats is not None else OpStats()
    validate_join_tree(q, t)
    order = list(order) if order is not None else t.preorder()
    check_two_phase_order(t, order)
    with stats.phase("reduce"):
        rels = bottom_up_pass(atom_relations(q, db), t, stats)
    with stats.phase("join"):
        out = join_in_order(q, rels, order, stats)
        return _finish(q, out, stats)


def measure_reduced_sizes(q: Query, t: JoinTree, db: Database) -> dict[int, int]:
    """Cardinality of every atom after the bottom-up semijoin pass."""
    validate_join_tree(q, t)
    rels = bottom_up_pass(atom_relations(q, db), t, OpStats())
    return {i: len(r) for i, r in enumerate(rels)}


def ya_plus_select(q: Query, db: Database, limit: int = DEFAULT_ENUM_LIMIT) -> tuple[JoinTree, list[int]]:
    """Tree with the smallest total size after its bottom-up pass, plus its BFS order.

    Trees come in serialization order and the first minimum wins.
    """
    best, best_total = None, None
    for t in enumerate_join_trees(q, limit):
        total = sum(measure_reduced_sizes(q, t, db).values())
        if best_total is None or total < best_total:
            best, best_total = t, total
    if best is None:
        build_join_tree(q)  # raises the acyclicity error with its residue
    return best, best.preorder()


def ya_plus(q: Query, db: Database, stats: OpStats | None = None) -> Relation:
    stats = stats if stats is not None else OpStats()
    with stats.phase("plan"):
        t, order = ya_plus_select(q, db)
    return ya_two_phase(q, db, t, order, stats)

"""Hypergraphs of queries, GYO acyclicity, join trees and monotone join orders."""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

from .datamodel import Query

DEFAULT_ENUM_LIMIT = 8


class AcyclicityError(ValueError):
    """Raised for cyclic queries; ``residue`` is what GYO could not remove."""

    def __init__(self, residue: dict[int, frozenset[str]]):
        self.residue = residue
        desc = ", ".join(f"#{i}{{{','.join(sorted(vs))}}}" for i, vs in sorted(residue.items()))
        super().__init__(f"query is cyclic; GYO residue: {desc}")


class EnumerationLimitError(ValueError):
    pass


class JoinTreeError(ValueError):
    """A tree or order that violates its contract."""


@dataclass(frozen=True)
class Hypergraph:
    edges: tuple[frozenset[str], ...]

    @classmethod
    def from_query(cls, q: Query) -> "Hypergraph":
        return cls(tuple(frozenset(a.vars) for a in q.body))

    @property
    def vertices(self) -> frozenset[str]:
        return frozenset().union(*self.edges) if self.edges else frozenset()


def gyo(h: Hypergraph) -> tuple[list[tuple[int, int]], dict[int, frozenset[str]]]:
    """Run the GYO reduction.

    Returns the (removed edge, witness edge) pairs in elimination order and the
    residue: the edges left when no rule applies. The hypergraph is acyclic
    iff the residue has at most one edge.
    """
    live: dict[int, set[str]] = {i: set(e) for i, e in enumerate(h.edges)}
    removed: list[tuple[int, int]] = []
    changed = True
    while changed and len(live) > 1:
        changed = False
        count: dict[str, int] = {}
        for vs in live.values():
            for v in vs:
                count[v] = count.get(v, 0) + 1
        for vs in live.values():
            ears = {v for v in vs if count[v] == 1}
            if ears:
                vs -= ears
                changed = True
        for i in sorted(live):
            if len(live) == 1:
                break
            witness = next((j for j in sorted(live) if j != i and live[i] <= live[j]), None)
            if witness is not None:
                del live[i]
                removed.append((i, witness))
                changed = True
    return removed, {i: frozenset(vs) for i, vs in live.items()}


def is_acyclic(h: Hypergraph | Query) -> bool:
    if isinstance(h, Query):
        h = Hypergraph.from_query(h)
    if not h.edges:
        return True
    _, residue = gyo(h)
    return len(residue) <= 1


@dataclass(frozen=True)
class JoinTree:
    """Rooted tree over atom indices; ``parent[root] == -1``."""

    root: int
    parent: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "parent", tuple(self.parent))
        n = len(self.parent)
        if not 0 <= self.root < n or self.parent[self.root] != -1:
            raise JoinTreeError(f"bad root {self.root} for parent array {self.parent}")
        for i, p in enumerate(self.parent):
            if i != self.root and not 0 <= p < n:
                raise JoinTreeError(f"node {i} has invalid parent {p}")
        # every node must reach the root
        for i in range(n):
            seen = set()
            while i != self.root:
                if i in seen:
                    raise JoinTreeError(f"parent array {self.parent} has a cycle")
                seen.add(i)
                i = self.parent[i]

    def __len__(self) -> int:
        return len(self.parent)

    @property
    def nodes(self) -> range:
        return range(len(self.parent))

    def children(self, i: int) -> list[int]:
        return [j for j, p in enumerate(self.parent) if p == i]

    def edges(self) -> list[tuple[int, int]]:
        """(parent, child) pairs."""
        return [(p, c) for c, p in enumerate(self.parent) if p != -1]

    def neighbours(self, i: int) -> list[int]:
        out = self.children(i)
        if self.parent[i] != -1:
            out.append(self.parent[i])
        return sorted(out)

    def preorder(self) -> list[int]:
        """Breadth-first from the root, children by index."""
        order, queue = [], deque([self.root])
        while queue:
            i = queue.popleft()
            order.append(i)
            queue.extend(self.children(i))
        return order

    def postorder(self) -> list[int]:
        """Children before parents (reverse breadth-first)."""
        return self.preorder()[::-1]

    def depth(self, i: int) -> int:
        d = 0
        while self.parent[i] != -1:
            i = self.parent[i]
            d += 1
        return d

    def subtree(self, i: int) -> list[int]:
        out, stack = [], [i]
        while stack:
            j = stack.pop()
            out.append(j)
            stack.extend(self.children(j))
        return sorted(out)

    def reroot(self, root: int) -> "JoinTree":
        adj = {i: self.neighbours(i) for i in self.nodes}
        parent = [-1] * len(self)
        seen, queue = {root}, deque([root])
        while queue:
            i = queue.popleft()
            for j in adj[i]:
                if j not in seen:
                    seen.add(j)
                    parent[j] = i
                    queue.append(j)
        return JoinTree(root, tuple(parent))

    def serialize(self) -> tuple:
        return (self.root, self.parent)

    def to_json(self) -> dict:
        return {"root": self.root, "parent": list(self.parent)}

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]], root: int = 0) -> "JoinTree":
        adj: dict[int, set[int]] = {i: set() for i in range(n)}
        for a, b in edges:
            adj[a].add(b)
            adj[b].add(a)
        parent = [-1] * n
        seen, queue = {root}, deque([root])
        while queue:
            i = queue.popleft()
            for j in sorted(adj[i]):
                if j not in seen:
                    seen.add(j)
                    parent[j] = i
                    queue.append(j)
        if len(seen) != n:
            raise JoinTreeError(f"edges {sorted(edges)} do not span {n} nodes")
        return cls(root, tuple(parent))


def check_join_tree(q: Query, t: JoinTree) -> bool:
    """True iff ``t`` spans the atoms and every variable's atoms form a connected subtree."""
    if len(t) != len(q.body):
        return False
    for v in q.variables:
        holders = {i for i, a in enumerate(q.body) if v in a.vars}
        # a connected subtree has exactly one node whose parent lies outside it
        tops = [i for i in holders if t.parent[i] not in holders]
        if len(tops) != 1:
            return False
    return True


def validate_join_tree(q: Query, t: JoinTree) -> None:
    if not check_join_tree(q, t):
        raise JoinTreeError(f"{t.to_json()} is not a join tree for {q}")


def build_join_tree(q: Query) -> JoinTree:
    """Join tree from the GYO elimination, rooted at atom 0."""
    h = Hypergraph.from_query(q)
    removed, residue = gyo(h)
    if len(residue) > 1:
        raise AcyclicityError(residue)
    t = JoinTree.from_edges(len(q.body), removed, root=0)
    validate_join_tree(q, t)
    return t


def _spanning_trees(n: int, edges: list[tuple[int, int]]) -> Iterator[list[tuple[int, int]]]:
    # include/exclude search over the edge list with a union-find per branch
    def find(uf, x):
        while uf[x] != x:
            x = uf[x]
        return x

    def rec(k, chosen, uf):
        if len(chosen) == n - 1:
            yield list(chosen)
            return
        if len(edges) - k < n - 1 - len(chosen):
            return
        a, b = edges[k]
        ra, rb = find(uf, a), find(uf, b)
        if ra != rb:
            uf2 = list(uf)
            uf2[ra] = rb
            chosen.append((a, b))
            yield from rec(k + 1, chosen, uf2)
            chosen.pop()
        yield from rec(k + 1, chosen, uf)

    yield from rec(0, [], list(range(n)))


def enumerate_join_trees(q: Query, limit: int = DEFAULT_ENUM_LIMIT) -> list[JoinTree]:
    """Every rooted join tree of ``q``, sorted by (root, parent array)."""
    n = len(q.body)
    if n > limit:
        raise EnumerationLimitError(f"{n} atoms exceeds the enumeration bound {limit}")
    if not is_acyclic(q):
        return []
    if n == 1:
        return [JoinTree(0, (-1,))]
    vs = [set(a.vars) for a in q.body]
    # an edge whose endpoints share nothing splits the tree into variable-disjoint
    # halves, so it can only link different components of the intersection graph
    comp = list(range(n))
    for a, b in itertools.combinations(range(n), 2):
        if vs[a] & vs[b] and comp[a] != comp[b]:
            old = comp[b]
            comp = [comp[a] if c == old else c for c in comp]
    edges = [(a, b) for a, b in itertools.combinations(range(n), 2) if vs[a] & vs[b] or comp[a] != comp[b]]
    found = set()
    for tree_edges in _spanning_trees(n, edges):
        t0 = JoinTree.from_edges(n, tree_edges)
        if not check_join_tree(q, t0):
            continue
        for r in range(n):
            found.add(t0.reroot(r))
    return sorted(found, key=JoinTree.serialize)


def is_monotone_order(t: JoinTree, order: Sequence[int]) -> bool:
    """Every prefix of ``order`` is connected in ``t``."""
    if sorted(order) != list(t.nodes):
        raise JoinTreeError(f"{list(order)} is not a permutation of the tree's atoms")
    placed = set()
    for k, i in enumerate(order):
        if k and not any(j in placed for j in t.neighbours(i)):
            return False
        placed.add(i)
    return True


def monotone_orders(t: JoinTree, start: int | None = None) -> list[list[int]]:
    """All monotone orders, lexicographically; optionally only those starting at ``start``."""
    n = len(t)
    adj = {i: set(t.neighbours(i)) for i in t.nodes}
    out: list[list[int]] = []

    def rec(order, placed, frontier):
        if len(order) == n:
            out.append(list(order))
            return
        for i in sorted(frontier):
            order.append(i)
            rec(order, placed | {i}, (frontier | adj[i]) - placed - {i})
            order.pop()

    starts = [start] if start is not None else list(t.nodes)
    for s in starts:
        rec([s], {s}, set(adj[s]))
    return out


def plan_parents(t: JoinTree, order: Sequence[int]) -> dict[int, int]:
    """For a monotone order, each non-first atom's unique earlier neighbour."""
    if not is_monotone_order(t, order):
        raise JoinTreeError(f"order {list(order)} is not monotone for {t.to_json()}")
    pos = {a: k for k, a in enumerate(order)}
    out = {}
    for k, a in enumerate(order[1:], start=1):
        earlier = [j for j in t.neighbours(a) if pos[j] < k]
        out[a] = earlier[0]
    return out

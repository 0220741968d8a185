"""Shared instances and independent reference computations for the tests."""

from __future__ import annotations

import itertools
import random
from collections import Counter
from dataclasses import dataclass

from ajl.datamodel import Atom, Query, Relation, oracle_join, relation
from ajl.generate import GenConfig, generate

D1_QUERY = "Q(i, j, k, l, m) :- R(i, j), S(j, k), T(k, l), U(l, m)."


def d1_db() -> dict[str, Relation]:
    return {
        "R": relation("i j", [(1, 1), (2, 2)]),
        "S": relation("j k", [(1, 10), (2, 20)]),
        "T": relation("k l", [(10, 100), (20, 200), (30, 300)]),
        "U": relation("l m", [(100, 7)]),
    }


@dataclass
class Case:
    name: str
    config: GenConfig
    query: Query
    db: dict

    @property
    def input_size(self) -> int:
        return sum(len(r) for r in self.db.values())


def random_configs(count: int, base_seed: int, max_tuples: int = 2000) -> list[GenConfig]:
    rng = random.Random(base_seed)
    sizes = [s for s in (20, 60, 150, 400, 1000, 2000) if s <= max_tuples]
    weights = [4, 4, 3, 2, 1, 1][: len(sizes)]
    out = []
    for i in range(count):
        out.append(
            GenConfig(
                shape=rng.choice(["path", "star", "snowflake"]),
                atoms=rng.randint(2, 5),
                tuples=rng.choices(sizes, weights)[0],
                dangling=rng.choice([0.0, 0.3, 0.7]),
                seed=base_seed * 1000 + i,
            )
        )
    return out


def make_cases(count: int, base_seed: int, max_tuples: int = 2000) -> list[Case]:
    cases = []
    for g in random_configs(count, base_seed, max_tuples):
        inst = generate(g)
        name = f"{g.shape}-a{g.atoms}-n{g.tuples}-d{g.dangling}-s{g.seed}"
        cases.append(Case(name, g, inst.query, inst.db))
    return cases


def naive_join(q: Query, db: dict) -> set[tuple]:
    """Nested-loop join over all tuple combinations, projected on the head.

    Only for tiny inputs; kept separate from ``oracle_join`` on purpose.
    """
    rels = [db[a.name] for a in q.body]
    out = set()
    for combo in itertools.product(*(sorted(r.tuples, key=repr) for r in rels)):
        env: dict = {}
        ok = True
        for atom, row in zip(q.body, combo):
            for v, x in zip(atom.vars, row):
                if env.setdefault(v, x) != x:
                    ok = False
                    break
            if not ok:
                break
        if ok:
            out.add(tuple(env[v] for v in q.head))
    return out


def rows_in_order(rel: Relation, schema) -> set[tuple]:
    pos = [rel.schema.index(a) for a in schema]
    return {tuple(t[p] for p in pos) for t in rel.tuples}


def group_count(q: Query, db: dict, groupby) -> dict:
    full = oracle_join(q.full(), db)
    pos = [full.schema.index(v) for v in groupby]
    return dict(Counter(tuple(t[p] for p in pos) for t in full.tuples))


def subtree_query(q: Query, nodes) -> Query:
    atoms = tuple(q.body[i] for i in sorted(nodes))
    head = tuple(dict.fromkeys(v for a in atoms for v in a.vars))
    return Query(head, atoms)


def is_join_tree_bruteforce(q: Query, parent: list[int]) -> bool:
    """Connectedness checked the slow way: for each variable, BFS over holders."""
    n = len(parent)
    adj = {i: set() for i in range(n)}
    for c, p in enumerate(parent):
        if p != -1:
            adj[c].add(p)
            adj[p].add(c)
    for v in q.variables:
        holders = {i for i, a in enumerate(q.body) if v in a.vars}
        start = next(iter(holders))
        seen, stack = {start}, [start]
        while stack:
            x = stack.pop()
            for y in adj[x]:
                if y in holders and y not in seen:
                    seen.add(y)
                    stack.append(y)
        if seen != holders:
            return False
    return True


def prufer_trees(n: int):
    """All labeled unrooted trees on ``n`` nodes as edge lists."""
    if n == 1:
        yield []
        return
    if n == 2:
        yield [(0, 1)]
        return
    for seq in itertools.product(range(n), repeat=n - 2):
        degree = [1] * n
        for x in seq:
            degree[x] += 1
        edges = []
        for x in seq:
            leaf = min(i for i in range(n) if degree[i] == 1)
            edges.append((leaf, x))
            degree[leaf] -= 1
            degree[x] -= 1
        u, w = [i for i in range(n) if degree[i] == 1]
        edges.append((u, w))
        yield edges


def root_edges(n: int, edges, root: int) -> list[int]:
    adj = {i: [] for i in range(n)}
    for a, b in edges:
        adj[a].append(b)
        adj[b].append(a)
    parent = [-2] * n
    parent[root] = -1
    stack = [root]
    while stack:
        x = stack.pop()
        for y in adj[x]:
            if parent[y] == -2:
                parent[y] = x
                stack.append(y)
    return parent


def bruteforce_join_trees(q: Query) -> set[tuple]:
    """(root, parent tuple) for every labeled rooted tree passing the check."""
    n = len(q.body)
    found = set()
    for edges in prufer_trees(n):
        for r in range(n):
            parent = root_edges(n, edges, r)
            if is_join_tree_bruteforce(q, parent):
                found.add((r, tuple(parent)))
    return found


def atoms_query(head: str, *atoms: str) -> Query:
    """``atoms_query("a b", "R a b", "S b c")``."""
    body = []
    for text in atoms:
        name, *vs = text.split()
        body.append(Atom(name, tuple(vs)))
    return Query(tuple(head.split()), tuple(body))

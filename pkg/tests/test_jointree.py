import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ajl.datamodel import Atom, Query
from ajl.jointree import (
    AcyclicityError,
    EnumerationLimitError,
    Hypergraph,
    JoinTree,
    JoinTreeError,
    build_join_tree,
    check_join_tree,
    enumerate_join_trees,
    gyo,
    is_acyclic,
    is_monotone_order,
    monotone_orders,
    plan_parents,
)
from ajl.query_parser import parse_query
from corpus import D1_QUERY, atoms_query, bruteforce_join_trees, is_join_tree_bruteforce

TRIANGLE = "Q(a, b, c) :- R(a, b), S(b, c), T(c, a)."


def test_path_query_tree():
    q = parse_query(D1_QUERY)
    t = build_join_tree(q)
    assert t.root == 0
    assert t.parent == (-1, 0, 1, 2) or list(t.parent) == [-1, 0, 1, 2]
    assert t.to_json() == {"root": 0, "parent": [-1, 0, 1, 2]}
    assert t.preorder() == [0, 1, 2, 3]
    assert t.postorder() == [3, 2, 1, 0]
    assert t.depth(3) == 3


def test_triangle_is_cyclic_with_residue():
    q = parse_query(TRIANGLE)
    assert not is_acyclic(q)
    with pytest.raises(AcyclicityError) as e:
        build_join_tree(q)
    assert set(e.value.residue) == {0, 1, 2}
    assert enumerate_join_trees(q) == []


def test_gyo_removes_contained_edges():
    q = atoms_query("a", "R a b c", "S a b", "T c")
    removed, residue = gyo(Hypergraph.from_query(q))
    assert len(residue) == 1  # a single surviving edge means acyclic
    assert len(removed) == 2


def test_cycle_covered_by_big_edge_is_acyclic():
    q = atoms_query("a", "R a b", "S b c", "T c a", "U a b c")
    assert is_acyclic(q)
    t = build_join_tree(q)
    assert check_join_tree(q, t)


def test_star_and_single_atom():
    q = atoms_query("a", "F a b c", "D a x", "E b y", "G c z")
    assert len(enumerate_join_trees(q)) == 4  # one star shape, four roots
    one = atoms_query("a", "R a")
    assert build_join_tree(one).parent == (-1,) or list(build_join_tree(one).parent) == [-1]
    assert len(enumerate_join_trees(one)) == 1


def test_enumeration_limit():
    atoms = [f"R{i} x{i} x{i + 1}" for i in range(9)]
    q = atoms_query("x0", *atoms)
    with pytest.raises(EnumerationLimitError):
        enumerate_join_trees(q)
    assert len(enumerate_join_trees(q, limit=9)) == 9


def test_jointree_validation():
    with pytest.raises(JoinTreeError):
        JoinTree(0, (-1, -1))
    with pytest.raises(JoinTreeError):
        JoinTree(0, (-1, 2, 1))
    q = parse_query(D1_QUERY)
    bad = JoinTree.from_edges(4, [(0, 2), (2, 1), (1, 3)])
    assert not check_join_tree(q, bad)


def test_reroot_keeps_edges():
    q = parse_query(D1_QUERY)
    t = build_join_tree(q)
    r = t.reroot(3)
    assert r.root == 3
    assert {frozenset(e) for e in r.edges()} == {frozenset(e) for e in t.edges()}
    assert check_join_tree(q, r)


def test_monotone_orders_path():
    t = build_join_tree(parse_query(D1_QUERY))
    orders = monotone_orders(t)
    # a path of 4 has 2^(n-1) connected-prefix orders
    assert len(orders) == 8
    assert [0, 1, 2, 3] in orders and [2, 1, 3, 0] in orders
    assert not is_monotone_order(t, [0, 2, 1, 3])
    assert monotone_orders(t, start=0) == [[0, 1, 2, 3]]
    assert plan_parents(t, [2, 3, 1, 0]) == {3: 2, 1: 2, 0: 1}
    with pytest.raises(JoinTreeError):
        plan_parents(t, [0, 2, 1, 3])


def test_monotone_orders_match_bruteforce():
    q = atoms_query("a", "F a b c", "D a x", "E b y", "G c z", "H z w")
    t = build_join_tree(q)
    brute = [list(p) for p in itertools.permutations(range(5)) if is_monotone_order(t, p)]
    assert sorted(monotone_orders(t)) == sorted(brute)
    for p in itertools.permutations(range(5)):
        connected = all(
            len(set(p[:k])) == 1 or all(any(n in p[:k] for n in t.neighbours(x)) for x in p[1:k]) for k in range(1, 6)
        )
        assert connected == is_monotone_order(t, p)


def test_path_enumeration_matches_bruteforce():
    q = parse_query("Q(i, m) :- R(i, j), S(j, k), T(k, l), U(l, m).")
    got = {(t.root, tuple(t.parent)) for t in enumerate_join_trees(q)}
    assert got == bruteforce_join_trees(q)
    assert len(got) == 4


@st.composite
def small_queries(draw):
    n = draw(st.integers(1, 5))
    universe = ["a", "b", "c", "d", "e"]
    atoms = []
    for i in range(n):
        vs = draw(st.lists(st.sampled_from(universe), min_size=1, max_size=3, unique=True))
        atoms.append(Atom(f"R{i}", tuple(vs)))
    return Query((atoms[0].vars[0],), tuple(atoms))


@settings(max_examples=200, deadline=None)
@given(small_queries())
def test_acyclic_iff_join_tree_exists(q):
    trees = enumerate_join_trees(q)
    brute = bruteforce_join_trees(q)
    assert is_acyclic(q) == bool(brute)
    assert {(t.root, tuple(t.parent)) for t in trees} == brute
    if brute:
        assert is_join_tree_bruteforce(q, list(build_join_tree(q).parent))
    else:
        with pytest.raises(AcyclicityError):
            build_join_tree(q)

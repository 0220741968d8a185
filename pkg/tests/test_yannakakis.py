import pytest

from ajl.datamodel import OpStats, oracle_join, relation, same_relation
from ajl.generate import GenConfig, generate
from ajl.jointree import JoinTree, JoinTreeError, build_join_tree, enumerate_join_trees
from ajl.query_parser import parse_query
from ajl.yannakakis import (
    bottom_up_pass,
    full_reduce,
    measure_reduced_sizes,
    top_down_pass,
    ya_classic,
    ya_plus,
    ya_plus_select,
    ya_two_phase,
)
from ajl.datamodel import atom_relations
from corpus import D1_QUERY, atoms_query, d1_db, make_cases


@pytest.fixture
def d1():
    q = parse_query(D1_QUERY)
    return q, d1_db(), build_join_tree(q)


def test_d1_passes_match_the_worked_sequence(d1):
    q, db, t = d1
    st = OpStats()
    up = bottom_up_pass(atom_relations(q, db), t, st)
    # T' = T semijoin U, S' = S semijoin T', R* = R semijoin S'
    assert up[2].tuples == {(10, 100)}
    assert up[1].tuples == {(1, 10)}
    assert up[0].tuples == {(1, 1)}
    assert up[3].tuples == {(100, 7)}
    down = top_down_pass(up, t, st)
    assert [r.tuples for r in down] == [{(1, 1)}, {(1, 10)}, {(10, 100)}, {(100, 7)}]
    assert st.semijoin_ops == 6


def test_d1_ya_classic(d1):
    q, db, t = d1
    st = OpStats()
    out = ya_classic(q, db, t, st)
    assert out.schema == q.head
    assert out.tuples == {(1, 1, 10, 100, 7)}
    assert st.semijoin_ops == 6 and st.join_ops == 3
    assert st.output_tuples == 1
    assert set(st.phase_ms) >= {"reduce", "join"}


def test_single_atom_has_no_semijoins():
    q = atoms_query("a b", "R a b")
    db = {"R": relation("a b", [(1, 2), (3, 4)])}
    st = OpStats()
    out = ya_classic(q, db, build_join_tree(q), st)
    assert out.tuples == db["R"].tuples
    assert st.semijoin_ops == 0
    assert ya_two_phase(q, db, build_join_tree(q)).tuples == db["R"].tuples


def test_empty_relation_empties_everything_bottom_up(d1):
    q, db, t = d1
    db = dict(db, U=relation("l m", []))
    up = bottom_up_pass(atom_relations(q, db), t, OpStats())
    assert all(len(r) == 0 for r in up)
    assert len(ya_classic(q, db, t)) == 0


def test_invalid_tree_is_rejected(d1):
    q, db, _ = d1
    bad = JoinTree.from_edges(4, [(0, 2), (2, 1), (1, 3)])
    with pytest.raises(JoinTreeError):
        ya_classic(q, db, bad)


def test_two_phase_order(d1):
    q, db, t = d1
    st = OpStats()
    assert ya_two_phase(q, db, t, [0, 1, 2, 3], st).tuples == {(1, 1, 10, 100, 7)}
    assert st.semijoin_ops == 3
    with pytest.raises(JoinTreeError):
        ya_two_phase(q, db, t, [0, 2, 1, 3])
    with pytest.raises(JoinTreeError):
        ya_two_phase(q, db, t, [1, 0, 2, 3])  # monotone but not root-first


def test_two_phase_uses_fewer_semijoins():
    for c in make_cases(20, base_seed=3, max_tuples=150):
        t = build_join_tree(c.query)
        a, b = OpStats(), OpStats()
        ra, rb = ya_classic(c.query, c.db, t, a), ya_two_phase(c.query, c.db, t, None, b)
        assert same_relation(ra, rb)
        n = len(c.query.body)
        assert b.semijoin_ops == n - 1
        if n >= 2:
            assert b.semijoin_ops < a.semijoin_ops


def test_measure_reduced_sizes(d1):
    q, db, t = d1
    assert measure_reduced_sizes(q, t, db) == {0: 1, 1: 1, 2: 1, 3: 1}
    assert len(db["T"]) == 3  # untouched
    inst = generate(GenConfig("path", atoms=3, tuples=50, seed=2))
    t2 = build_join_tree(inst.query)
    sizes = measure_reduced_sizes(inst.query, t2, inst.db)
    assert sizes == {i: len(inst.db[a.name]) for i, a in enumerate(inst.query.body)}


def test_ya_plus_on_d1(d1):
    q, db, _ = d1
    trees = enumerate_join_trees(q)
    # leaves keep their full size, so the totals differ by root:
    # R: 1+1+1+1, S: R=2 +1+1+1, T: R=2, S=2 +1+1, U: R=2, S=2, T=2 +1
    totals = {tr.root: sum(measure_reduced_sizes(q, tr, db).values()) for tr in trees}
    assert totals == {0: 4, 1: 5, 2: 6, 3: 7}
    chosen, order = ya_plus_select(q, db)
    assert chosen.root == 0
    assert order == chosen.preorder()
    assert ya_plus(q, db).tuples == {(1, 1, 10, 100, 7)}


def test_ya_plus_ties_go_to_first_serialized_tree():
    q = parse_query(D1_QUERY)
    db = {n: relation(vs, [(1, 1)]) for n, vs in [("R", "i j"), ("S", "j k"), ("T", "k l"), ("U", "l m")]}
    trees = enumerate_join_trees(q)
    assert len({sum(measure_reduced_sizes(q, tr, db).values()) for tr in trees}) == 1
    assert ya_plus_select(q, db)[0] == trees[0]


def test_ya_plus_prefers_root_where_pruning_flows():
    # U keeps a single l; rooted at R the filter climbs U -> T -> S -> R
    q = parse_query(D1_QUERY)
    db = {
        "R": relation("i j", [(i, i) for i in range(50)]),
        "S": relation("j k", [(i, i) for i in range(50)]),
        "T": relation("k l", [(i, i) for i in range(50)]),
        "U": relation("l m", [(3, 0)]),
    }
    chosen, _ = ya_plus_select(q, db)
    totals = {tr.root: sum(measure_reduced_sizes(q, tr, db).values()) for tr in enumerate_join_trees(q)}
    assert totals[chosen.root] == min(totals.values())
    assert chosen.root == 0
    assert totals[3] > totals[0]


def test_full_reduce_output_is_exact():
    for c in make_cases(15, base_seed=4, max_tuples=150):
        t = build_join_tree(c.query)
        full = oracle_join(c.query.full(), c.db)
        for a, rel in zip(c.query.body, full_reduce(c.query, c.db, t)):
            pos = [full.schema.index(v) for v in a.vars]
            assert rel.tuples == {tuple(r[p] for p in pos) for r in full.tuples}


def test_instance_optimality_proxy_on_random_instances():
    for c in make_cases(40, base_seed=5, max_tuples=400):
        st = OpStats()
        out = ya_classic(c.query, c.db, build_join_tree(c.query), st)
        assert st.total() <= 10 * (c.input_size + len(out))

import pytest

from ajl.csvio import load_csv, parse_value, read_relation, write_relation
from ajl.datamodel import QueryError, relation
from ajl.query_parser import QuerySyntaxError, parse_query
from corpus import D1_QUERY, d1_db


def test_parse_path_query():
    q = parse_query("Q(i,m) :- R(i,j), S(j,k), T(k,l), U(l,m).")
    assert q.head == ("i", "m")
    assert [a.name for a in q.body] == ["R", "S", "T", "U"]
    assert q.body[2].vars == ("k", "l")


def test_parse_single_atom_comments_and_empty_head():
    assert parse_query("Q(a) :- R(a).").body[0].vars == ("a",)
    q = parse_query("# header comment\nAns() :- R(a, b), # trailing\n  S(b).\n")
    assert q.head == () and len(q.body) == 2


@pytest.mark.parametrize(
    "text, line, col",
    [
        ("Q(x) :- R(x,y)", 1, 15),
        ("Q(x) :- R(x,y) S(y).", 1, 16),
        ("Q(x) :-\n  R(x, 1y).", 2, 8),
        ("Q(z) :- R(x).", 1, 1),
        ("Q(x) :- R().", 1, 9),
        ("Q(x) :- R(x, x).", 1, 9),
        ("Q(x) :- R(x). extra", 1, 15),
        ("Q(x) :- R(x$).", 1, 12),
    ],
)
def test_syntax_errors_carry_positions(text, line, col):
    with pytest.raises(QuerySyntaxError) as e:
        parse_query(text)
    assert (e.value.line, e.value.col) == (line, col)
    assert isinstance(e.value, QueryError)


def test_parse_value():
    assert parse_value("42") == 42
    assert parse_value("007") == 7
    assert parse_value("-3") == "-3"
    assert parse_value("1.5") == "1.5"
    assert parse_value("abc") == "abc"
    assert parse_value(str(2**63)) == str(2**63)


def _write_d1(d):
    for name, rel in d1_db().items():
        write_relation(rel, d / f"{name}.csv")


def test_load_d1(tmp_path):
    _write_d1(tmp_path)
    db = load_csv(tmp_path, parse_query(D1_QUERY))
    assert {k: len(v) for k, v in db.items()} == {"R": 2, "S": 2, "T": 3, "U": 1}
    assert db["T"].tuples == d1_db()["T"].tuples


def test_header_only_and_duplicates(tmp_path):
    (tmp_path / "R.csv").write_text("a,b\n")
    assert len(read_relation(tmp_path / "R.csv")) == 0
    (tmp_path / "R.csv").write_text("a,b\n1,x\n1,x\n2,y\n")
    assert read_relation(tmp_path / "R.csv").tuples == {(1, "x"), (2, "y")}


def test_load_errors(tmp_path):
    q = parse_query("Q(a) :- R(a, b), S(b).")
    (tmp_path / "R.csv").write_text("a,b,c\n1,2,3\n")
    (tmp_path / "S.csv").write_text("b\n2\n")
    with pytest.raises(QueryError):
        load_csv(tmp_path, q)
    (tmp_path / "R.csv").unlink()
    with pytest.raises(FileNotFoundError):
        load_csv(tmp_path, q)
    (tmp_path / "R.csv").write_text("a,b\n1,2,3\n")
    with pytest.raises(QueryError):
        load_csv(tmp_path, q)


def test_written_rows_are_sorted(tmp_path):
    rel = relation("a b", [(10, "x"), (2, "y"), ("b", 1), (2, "a")])
    write_relation(rel, tmp_path / "o.csv")
    assert (tmp_path / "o.csv").read_text() == "a,b\n2,a\n2,y\n10,x\nb,1\n"

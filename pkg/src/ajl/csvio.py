"""CSV loading and writing for relations and results."""

from __future__ import annotations

import csv
import re
from pathlib import Path

from .datamodel import Query, QueryError, Relation, Value

_INT = re.compile(r"[0-9]+")
_INT64_MAX = 2**63 - 1


def parse_value(field: str) -> Value:
    if _INT.fullmatch(field):
        v = int(field)
        if v <= _INT64_MAX:
            return v
    return field


def read_relation(path: str | Path) -> Relation:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise QueryError(f"{path}: missing header row") from None
        rows = set()
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise QueryError(f"{path}:{lineno}: {len(row)} fields, header has {len(header)}")
            rows.add(tuple(parse_value(f) for f in row))
    return Relation(tuple(header), frozenset(rows))


def load_csv(directory: str | Path, q: Query) -> dict[str, Relation]:
    """Read ``<dir>/<name>.csv`` for every relation name in ``q``."""
    directory = Path(directory)
    db = {}
    for atom in q.body:
        if atom.name in db:
            rel = db[atom.name]
        else:
            path = directory / f"{atom.name}.csv"
            if not path.exists():
                raise FileNotFoundError(f"missing relation file {path}")
            rel = read_relation(path)
            db[atom.name] = rel
        if rel.arity != len(atom.vars):
            raise QueryError(
                f"{atom.name}.csv has {rel.arity} columns {list(rel.schema)} but atom {atom} has {len(atom.vars)}"
            )
    return db


def write_relation(rel: Relation, path: str | Path) -> None:
    """Write with a header row, rows sorted so output is diff-stable."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(rel.schema)
        for row in rel.sorted_rows():
            w.writerow(row)


def write_database(db: dict[str, Relation], directory: str | Path) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for name, rel in db.items():
        write_relation(rel, directory / f"{name}.csv")

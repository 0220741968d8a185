"""Synthetic acyclic instances with controlled dangling tuples.

Joining tuples are projections of sampled full assignments ("witnesses"), so
each of them takes part in the output. Dangling tuples get a fresh value in
the variables they share with their parent atom, drawn from a range no other
tuple uses, so they provably join nothing.
"""

from __future__ import annotations

import json
import random
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .csvio import write_database
from .datamodel import Atom, Query, Relation

SHAPES = ("path", "star", "snowflake", "fanout", "quadratic-adversarial")
FRESH_BASE = 1_000_000_000


@dataclass
class GenConfig:
    shape: str = "path"
    atoms: int = 4
    tuples: int = 100
    domain: int | None = None
    dangling: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise ValueError(f"unsupported shape {self.shape!r}; choose from {', '.join(SHAPES)}")
        if not 0.0 <= self.dangling < 1.0:
            raise ValueError(f"dangling fraction must be in [0, 1), got {self.dangling}")
        if self.atoms < 1 or self.tuples < 1:
            raise ValueError("atoms and tuples must be positive")


@dataclass
class Instance:
    query: Query
    db: dict[str, Relation]
    manifest: dict = field(default_factory=dict)


def _shape(g: GenConfig) -> tuple[list[Atom], list[int], set[str]]:
    """Atoms, the parent of each atom in the generating tree, and key-determined variables."""
    n = g.atoms
    if g.shape == "path":
        atoms = [Atom(f"R{i}", (f"x{i}", f"x{i + 1}")) for i in range(n)]
        return atoms, [i - 1 for i in range(n)], set()
    if g.shape == "fanout":
        atoms = [Atom(f"R{i}", ("a", f"b{i}")) for i in range(n)]
        return atoms, [-1] + [0] * (n - 1), set()
    if g.shape == "star":
        if n == 1:
            return [Atom("F", ("k1",))], [-1], set()
        keys = tuple(f"k{i}" for i in range(1, n))
        atoms = [Atom("F", keys)] + [Atom(f"D{i}", (f"k{i}", f"v{i}")) for i in range(1, n)]
        return atoms, [-1] + [0] * (n - 1), {f"v{i}" for i in range(1, n)}
    if g.shape == "snowflake":
        if n == 1:
            return [Atom("F", ("k1",))], [-1], set()
        dims = (n - 1 + 1) // 2 if n > 2 else 1
        subs = n - 1 - dims
        atoms = [Atom("F", tuple(f"k{i}" for i in range(1, dims + 1)))]
        parents = [-1]
        det = set()
        for i in range(1, dims + 1):
            atoms.append(Atom(f"D{i}", (f"k{i}", f"s{i}")))
            parents.append(0)
            det.add(f"s{i}")
        for i in range(1, subs + 1):
            atoms.append(Atom(f"E{i}", (f"s{i}", f"w{i}")))
            parents.append(i)
            det.add(f"w{i}")
        return atoms, parents, det
    raise ValueError(f"unsupported shape {g.shape!r}")


def _adversarial(g: GenConfig) -> Instance:
    n = g.tuples
    q = Query(("a", "b", "c", "d"), (Atom("R", ("a", "b")), Atom("S", ("b", "c")), Atom("T", ("c", "d"))))
    db = {
        "R": Relation(("a", "b"), frozenset((i, 0) for i in range(n))),
        "S": Relation(("b", "c"), frozenset((0, j) for j in range(n))),
        "T": Relation(("c", "d"), frozenset([(0, 0)] + [(n + j, j) for j in range(1, n)])),
    }
    manifest = {
        "config": asdict(g),
        "query": str(q),
        "sizes": {k: len(v) for k, v in db.items()},
        "expected": {
            # R joins S on the single value b = 0; only c = 0 survives T
            "binary_join_intermediate": n * n,
            "binary_join_intermediate_min": n * n // 2,
            "output_size": n,
            "output_max": n,
        },
    }
    return Instance(q, db, manifest)


def generate(g: GenConfig) -> Instance:
    """Build an instance in memory; deterministic given the config."""
    if g.shape == "quadratic-adversarial":
        return _adversarial(g)
    rng = random.Random(g.seed)
    atoms, parents, determined = _shape(g)
    joining = max(1, round(g.tuples * (1.0 - g.dangling)))
    domain = g.domain or max(2, 4 * joining)
    variables = list(dict.fromkeys(v for a in atoms for v in a.vars))
    fanout_key = {"a"} if g.shape == "fanout" else set()
    key_domain = max(2, joining // 8) if g.shape == "fanout" else domain

    # determined variables follow their key: one value per key, shared by every witness
    det_map: dict[str, dict] = {v: {} for v in determined}
    det_key = {}
    for a in atoms:
        for v in a.vars:
            if v in determined:
                det_key.setdefault(v, a.vars[0])

    witnesses = []
    for _ in range(joining):
        w = {}
        # first-appearance order puts every key before the variables it determines
        for v in variables:
            if v in determined:
                w[v] = det_map[v].setdefault(w[det_key[v]], rng.randrange(domain))
            else:
                w[v] = rng.randrange(key_domain if v in fanout_key else domain)
        witnesses.append(w)

    fresh = FRESH_BASE
    db: dict[str, Relation] = {}
    dangling_counts = {}
    for i, a in enumerate(atoms):
        rows = {tuple(w[v] for v in a.vars) for w in witnesses}
        n_dangling = 0
        if parents[i] != -1 and g.dangling > 0:
            shared = set(a.vars) & set(atoms[parents[i]].vars)
            n_dangling = round(len(rows) * g.dangling / (1.0 - g.dangling))
            for _ in range(n_dangling):
                row = []
                for v in a.vars:
                    if v in shared:
                        row.append(fresh)
                        fresh += 1
                    else:
                        row.append(rng.randrange(domain))
                rows.add(tuple(row))
        db[a.name] = Relation(a.vars, frozenset(rows))
        dangling_counts[a.name] = n_dangling

    q = Query(tuple(variables), tuple(atoms))
    manifest = {
        "config": asdict(g),
        "query": str(q),
        "root": atoms[0].name,
        "sizes": {k: len(v) for k, v in db.items()},
        "dangling": dangling_counts,
        "expected": {
            "min_dangling_fraction_non_root": (
                min(
                    (dangling_counts[a.name] / len(db[a.name]) for i, a in enumerate(atoms) if parents[i] != -1),
                    default=0.0,
                )
            ),
            "fully_joining": g.dangling == 0,
        },
    }
    return Instance(q, db, manifest)


def write_instance(inst: Instance, directory: str | Path) -> Path:
    directory = Path(directory)
    write_database(inst.db, directory)
    (directory / "query.cq").write_text(inst.manifest.get("query", str(inst.query)) + "\n", encoding="utf-8")
    (directory / "manifest.json").write_text(json.dumps(inst.manifest, indent=2, sort_keys=True) + "\n")
    return directory


def gen_instance(g: GenConfig, directory: str | Path | None = None) -> Instance:
    inst = generate(g)
    if directory is not None:
        write_instance(inst, directory)
    return inst

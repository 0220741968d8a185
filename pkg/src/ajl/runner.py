"""Strategy dispatch plus the ``run`` and ``bench`` drivers behind the CLI."""

from __future__ import annotations

import json
import os
import statistics
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .aggregates import (
    AggregateSpec,
    dominating_atom,
    oracle_aggregate,
    ya_aggregate,
    zero_ma_aggregate,
)
from .csvio import load_csv, write_relation
from .datamodel import Database, OpStats, Query, QueryError, Relation, oracle_join, row_key
from .jointree import AcyclicityError, JoinTree, build_join_tree
from .predicate_transfer import BloomParams, pt, rpt, select_rpt_root
from .query_parser import parse_query
from .yannakakis import ya_classic, ya_plus_select, ya_two_phase
from .zero_overhead import hash_join_plan, left_deep_plan, nested_ya, ttj

STRATEGIES = ("oracle", "hashjoin", "ya", "ya2", "yaplus", "pt", "rpt", "ttj", "nested")
EXIT_OK, EXIT_INPUT, EXIT_CYCLIC, EXIT_IO = 0, 1, 2, 3


@dataclass
class StrategyResult:
    relation: Relation
    stats: OpStats
    tree: JoinTree | None = None
    order: list[int] | None = None


def execute(
    strategy: str, q: Query, db: Database, params: BloomParams | None = None, stats: OpStats | None = None
) -> StrategyResult:
    """Evaluate ``q`` with the named strategy on its default tree and order."""
    stats = stats if stats is not None else OpStats()
    params = params or BloomParams()
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}; choose from {', '.join(STRATEGIES)}")
    if strategy == "oracle":
        with stats.phase("join"):
            out = oracle_join(q, db)
        stats.output_tuples += len(out)
        return StrategyResult(out, stats)
    if strategy == "yaplus":
        with stats.phase("plan"):
            t, order = ya_plus_select(q, db)
        return StrategyResult(ya_two_phase(q, db, t, order, stats), stats, t, order)
    if strategy == "rpt":
        # root selection is repeated inside rpt(); only the tree is needed here
        t, _ = select_rpt_root(q, db, params, OpStats())
        return StrategyResult(rpt(q, db, params, stats), stats, t, t.preorder())

    t = build_join_tree(q)
    if strategy == "hashjoin":
        with stats.phase("join"):
            out = hash_join_plan(left_deep_plan(q, t), db, stats)
        return StrategyResult(out, stats, t, t.preorder())
    if strategy == "ttj":
        with stats.phase("join"):
            out = ttj(left_deep_plan(q, t), db, stats)
        return StrategyResult(out, stats, t, t.preorder())
    if strategy == "ya":
        return StrategyResult(ya_classic(q, db, t, stats), stats, t, t.postorder())
    if strategy == "ya2":
        return StrategyResult(ya_two_phase(q, db, t, None, stats), stats, t, t.preorder())
    if strategy == "pt":
        return StrategyResult(pt(q, db, params, stats), stats, t, t.preorder())
    return StrategyResult(nested_ya(q, db, t, stats), stats, t, t.postorder())


@dataclass
class RunConfig:
    query: str
    data: str
    strategy: str = "ya"
    seed: int | None = None
    bloom_bits_per_key: int = 8
    bloom_hashes: int = 6
    aggregate: str | None = None
    groupby: list[str] = field(default_factory=list)
    out: str | None = None
    stats_out: str | None = None

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {', '.join(STRATEGIES)}")
        if self.seed is None:
            self.seed = int(os.environ.get("AJL_SEED", "0"))

    @property
    def params(self) -> BloomParams:
        return BloomParams(self.bloom_bits_per_key, self.bloom_hashes, self.seed)


def stats_document(strategy: str, res: StrategyResult, seed: int, **extra) -> dict:
    doc = {
        "strategy": strategy,
        "output_size": len(res.relation),
        "counters": res.stats.counters(),
        "phase_ms": {
            "reduce": round(res.stats.phase_ms.get("reduce", 0.0), 3),
            "join": round(res.stats.phase_ms.get("join", 0.0) + res.stats.phase_ms.get("aggregate", 0.0), 3),
        },
        "join_tree": res.tree.to_json() if res.tree is not None else None,
        "join_order": res.order,
        "seed": seed,
    }
    doc.update(extra)
    return doc


def _aggregate_result(cfg: RunConfig, q: Query, db: Database) -> tuple[StrategyResult, Relation, dict]:
    spec = AggregateSpec.parse(cfg.aggregate)
    stats = OpStats()
    name = spec.semiring.name if spec.lift is None else f"{spec.semiring.name}_{spec.lift}"
    if cfg.strategy == "oracle":
        agg, t, mode = oracle_aggregate(q, db, spec.semiring, cfg.groupby, spec.lift), None, "oracle"
    else:
        t = build_join_tree(q)
        if dominating_atom(q, cfg.groupby) is not None:
            agg = zero_ma_aggregate(q, db, t, spec.semiring, cfg.groupby, stats, spec.lift)
            t, mode = t.reroot(dominating_atom(q, cfg.groupby)), "0ma"
        else:
            agg, mode = ya_aggregate(q, db, t, spec.semiring, cfg.groupby, stats, spec.lift), "ya_aggregate"
    if name in agg.schema:
        name = f"{name}_value"
    rel = Relation(agg.schema + (name,), frozenset(k + (v,) for k, v in agg.annotations.items()))
    res = StrategyResult(rel, stats, t, t.postorder() if t is not None else None)
    return res, rel, {"aggregate": cfg.aggregate, "groupby": list(cfg.groupby), "aggregate_mode": mode}


def run(cfg: RunConfig, stderr=None) -> int:
    """Evaluate one query; writes the sorted result CSV and the stats JSON."""
    stderr = stderr or sys.stderr
    try:
        q = parse_query(Path(cfg.query).read_text(encoding="utf-8"))
        db = load_csv(cfg.data, q)
    except OSError as e:
        print(f"error: {e}", file=stderr)
        return EXIT_IO
    except QueryError as e:
        print(f"error: {e}", file=stderr)
        return EXIT_INPUT
    try:
        if cfg.aggregate:
            res, rel, extra = _aggregate_result(cfg, q, db)
        else:
            res = execute(cfg.strategy, q, db, cfg.params)
            rel, extra = res.relation, {}
    except AcyclicityError as e:
        print(f"error: {e}", file=stderr)
        for i, vs in sorted(e.residue.items()):
            print(f"  residue atom #{i} {q.body[i].name}: {{{', '.join(sorted(vs))}}}", file=stderr)
        return EXIT_CYCLIC
    except (QueryError, ValueError) as e:
        print(f"error: {e}", file=stderr)
        return EXIT_INPUT
    doc = stats_document(cfg.strategy, res, cfg.seed, **extra)
    try:
        if cfg.out:
            write_relation(rel, cfg.out)
        else:
            print(",".join(rel.schema))
            for row in rel.sorted_rows():
                print(",".join(map(str, row)))
        text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
        if cfg.stats_out:
            Path(cfg.stats_out).write_text(text)
        else:
            print(text, file=stderr, end="")
    except OSError as e:
        print(f"error: {e}", file=stderr)
        return EXIT_IO
    return EXIT_OK


@dataclass
class BenchConfig:
    strategies: list[str]
    instances: list[str]
    repeats: int = 3
    seed: int = 0
    baseline: str = "hashjoin"

    def __post_init__(self):
        if not self.strategies or not self.instances:
            raise ValueError("bench needs at least one strategy and one instance")
        if self.repeats < 3:
            raise ValueError("bench needs at least 3 repetitions")
        for s in self.strategies:
            if s not in STRATEGIES:
                raise ValueError(f"unknown strategy {s!r}")


def _time_strategy(strategy: str, q: Query, db: Database, params: BloomParams, repeats: int):
    times, first = [], None
    for _ in range(repeats):
        start = time.perf_counter()
        res = execute(strategy, q, db, params)
        times.append((time.perf_counter() - start) * 1000.0)
        first = first or res
    return first, statistics.median(times)


def bench_instances(cfg: BenchConfig, loaded: Sequence[tuple[str, Query, Database]]) -> dict:
    params = BloomParams(seed=cfg.seed)
    rows = []
    for name, q, db in loaded:
        base_res, base_ms = _time_strategy(cfg.baseline, q, db, params, cfg.repeats)
        base_total = base_res.stats.total()
        for s in cfg.strategies:
            if s == cfg.baseline:
                res, ms = base_res, base_ms
            else:
                res, ms = _time_strategy(s, q, db, params, cfg.repeats)
            total = res.stats.total()
            rows.append(
                {
                    "instance": name,
                    "strategy": s,
                    "output_size": len(res.relation),
                    "counters": res.stats.counters(),
                    "total_work": total,
                    "median_ms": round(ms, 3),
                    "work_ratio_vs_baseline": round(total / base_total, 4) if base_total else None,
                    "probe_ratio_vs_baseline": (
                        round(res.stats.hash_probes / base_res.stats.hash_probes, 4)
                        if base_res.stats.hash_probes
                        else None
                    ),
                    "time_ratio_vs_baseline": round(ms / base_ms, 4) if base_ms else None,
                }
            )
    return {"baseline": cfg.baseline, "repeats": cfg.repeats, "seed": cfg.seed, "rows": rows}


def bench(cfg: BenchConfig) -> dict:
    loaded = []
    for d in cfg.instances:
        q = parse_query((Path(d) / "query.cq").read_text(encoding="utf-8"))
        loaded.append((str(d), q, load_csv(d, q)))
    return bench_instances(cfg, loaded)


def format_report(report: dict) -> str:
    cols = ("instance", "strategy", "output_size", "total_work", "median_ms", "work_ratio_vs_baseline",
            "probe_ratio_vs_baseline", "time_ratio_vs_baseline")
    heads = ("instance", "strategy", "out", "work", "ms", "work/base", "probes/base", "time/base")
    table = [heads] + [tuple("-" if r[c] is None else str(r[c]) for c in cols) for r in report["rows"]]
    widths = [max(len(row[i]) for row in table) for i in range(len(heads))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in table]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def sorted_csv_text(rel: Relation) -> str:
    rows = [",".join(rel.schema)] + [",".join(map(str, r)) for r in sorted(rel.tuples, key=row_key)]
    return "\n".join(rows) + "\n"

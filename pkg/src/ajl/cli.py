"""Command line entry point: ``ajl run | gen | bench | emit-sql``."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .datamodel import QueryError
from .generate import SHAPES, GenConfig, gen_instance
from .jointree import AcyclicityError
from .query_parser import parse_query
from .runner import (
    EXIT_CYCLIC,
    EXIT_INPUT,
    EXIT_IO,
    EXIT_OK,
    STRATEGIES,
    BenchConfig,
    RunConfig,
    bench,
    format_report,
    run,
)
from .sql import MODES, emit_sql_script


def _default_seed() -> int:
    return int(os.environ.get("AJL_SEED", "0"))


def _csv_list(text: str) -> list[str]:
    return [s.strip() for s in text.split(",") if s.strip()]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ajl", description="Instrumented evaluator for acyclic join queries.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="evaluate one query over a CSV directory")
    r.add_argument("--query", required=True, help="path to a .cq file")
    r.add_argument("--data", required=True, help="directory holding <Relation>.csv files")
    r.add_argument("--strategy", choices=STRATEGIES, default="ya")
    r.add_argument("--seed", type=int, default=None, help="defaults to $AJL_SEED, then 0")
    r.add_argument("--bloom-bits-per-key", type=int, default=8)
    r.add_argument("--bloom-hashes", type=int, default=6)
    r.add_argument("--aggregate", default=None, help="count, sum:<var> or min:<var>")
    r.add_argument("--groupby", type=_csv_list, default=[], help="comma-separated head variables")
    r.add_argument("--out", default=None, help="result CSV path (default: stdout)")
    r.add_argument("--stats", dest="stats_out", default=None, help="stats JSON path (default: stderr)")

    g = sub.add_parser("gen", help="write a synthetic instance")
    g.add_argument("--shape", choices=SHAPES, default="path")
    g.add_argument("--atoms", type=int, default=4)
    g.add_argument("--tuples", type=int, default=100, help="tuples per relation (N for quadratic-adversarial)")
    g.add_argument("--domain", type=int, default=None)
    g.add_argument("--dangling", type=float, default=0.0)
    g.add_argument("--seed", type=int, default=None)
    g.add_argument("--out", required=True, help="output directory")

    b = sub.add_parser("bench", help="compare strategies over instance directories")
    b.add_argument("--strategies", type=_csv_list, default=["hashjoin", "ya"])
    b.add_argument("--repeats", type=int, default=3)
    b.add_argument("--seed", type=int, default=None)
    b.add_argument("--json", dest="json_out", default=None, help="write the JSON report here")
    b.add_argument("instances", nargs="+", help="directories with query.cq and CSVs")

    e = sub.add_parser("emit-sql", help="print the semijoin-reduction SQL script")
    e.add_argument("--query", required=True)
    e.add_argument("--mode", choices=MODES, default="three-pass")
    e.add_argument("--out", default=None)
    return p


def _cmd_run(a) -> int:
    try:
        cfg = RunConfig(
            query=a.query,
            data=a.data,
            strategy=a.strategy,
            seed=a.seed,
            bloom_bits_per_key=a.bloom_bits_per_key,
            bloom_hashes=a.bloom_hashes,
            aggregate=a.aggregate,
            groupby=a.groupby,
            out=a.out,
            stats_out=a.stats_out,
        )
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    return run(cfg)


def _cmd_gen(a) -> int:
    seed = a.seed if a.seed is not None else _default_seed()
    try:
        g = GenConfig(a.shape, a.atoms, a.tuples, a.domain, a.dangling, seed)
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    try:
        inst = gen_instance(g, a.out)
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    sizes = ", ".join(f"{k}={v}" for k, v in inst.manifest["sizes"].items())
    print(f"wrote {a.out}: {inst.query} [{sizes}]")
    return EXIT_OK


def _cmd_bench(a) -> int:
    seed = a.seed if a.seed is not None else _default_seed()
    try:
        cfg = BenchConfig(a.strategies, a.instances, a.repeats, seed)
        report = bench(cfg)
    except AcyclicityError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CYCLIC
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    except (QueryError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    print(format_report(report), end="")
    if a.json_out:
        try:
            Path(a.json_out).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
        except OSError as e:
            print(f"error: {e}", file=sys.stderr)
            return EXIT_IO
    return EXIT_OK


def _cmd_emit_sql(a) -> int:
    try:
        q = parse_query(Path(a.query).read_text(encoding="utf-8"))
        text = emit_sql_script(q, mode=a.mode)
        if a.out:
            Path(a.out).write_text(text)
        else:
            print(text, end="")
    except AcyclicityError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CYCLIC
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    except QueryError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


COMMANDS = {"run": _cmd_run, "gen": _cmd_gen, "bench": _cmd_bench, "emit-sql": _cmd_emit_sql}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return COMMANDS[args.command](args)


if __name__ == "__main__":
    sys.exit(main())

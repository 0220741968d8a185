#!/usr/bin/env python3
"""Generate a small grid of instances and benchmark strategies against hashjoin."""

from __future__ import annotations

import argparse
import json
import tempfile
from pathlib import Path

from ajl.generate import GenConfig, gen_instance
from ajl.runner import STRATEGIES, BenchConfig, bench, format_report


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--shapes", default="path,star,snowflake")
    p.add_argument("--atoms", type=int, default=4)
    p.add_argument("--tuples", type=int, default=500)
    p.add_argument("--dangling", default="0,0.5")
    p.add_argument("--strategies", default=",".join(s for s in STRATEGIES if s != "oracle"))
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workdir", default=None, help="keep the generated instances here")
    p.add_argument("--json", default=None)
    a = p.parse_args()

    root = Path(a.workdir or tempfile.mkdtemp(prefix="ajl-bench-"))
    dirs = []
    for shape in a.shapes.split(","):
        for d in a.dangling.split(","):
            name = f"{shape}-a{a.atoms}-n{a.tuples}-d{d}"
            gen_instance(GenConfig(shape, a.atoms, a.tuples, None, float(d), a.seed), root / name)
            dirs.append(str(root / name))

    report = bench(BenchConfig(a.strategies.split(","), dirs, a.repeats, a.seed))
    for r in report["rows"]:
        r["instance"] = Path(r["instance"]).name
    print(format_report(report), end="")
    if a.json:
        Path(a.json).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")


if __name__ == "__main__":
    main()

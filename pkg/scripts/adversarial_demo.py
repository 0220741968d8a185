#!/usr/bin/env python3
"""Binary hash join vs Yannakakis on the quadratic-adversarial family.

R(a,b) and S(b,c) all share b = 0, so R join S has N^2 tuples, while only
c = 0 survives T and the output has N tuples.
"""

from __future__ import annotations

import argparse

from ajl.datamodel import OpStats
from ajl.generate import GenConfig, generate
from ajl.jointree import build_join_tree
from ajl.yannakakis import ya_classic
from ajl.zero_overhead import hash_join_plan, left_deep_plan, ttj


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--sizes", default="64,128,256,512,1024")
    a = p.parse_args()

    print(f"{'N':>6} {'out':>6} {'hash mat':>10} {'hash work':>10} {'ttj work':>9} {'ya work':>8} {'ya/(in+out)':>12}")
    for n in map(int, a.sizes.split(",")):
        inst = generate(GenConfig("quadratic-adversarial", tuples=n))
        q, db = inst.query, inst.db
        t = build_join_tree(q)
        hs, ts, ys = OpStats(), OpStats(), OpStats()
        hash_join_plan(left_deep_plan(q, t), db, hs)
        ttj(left_deep_plan(q, t), db, ts)
        out = ya_classic(q, db, t, ys)
        linear = sum(len(r) for r in db.values()) + len(out)
        print(
            f"{n:>6} {len(out):>6} {hs.tuples_materialized:>10} {hs.total():>10} "
            f"{ts.total():>9} {ys.total():>8} {ys.total() / linear:>12.2f}"
        )


if __name__ == "__main__":
    main()

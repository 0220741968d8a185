#!/usr/bin/env python3
"""Run RPT under every monotone join order and report the per-order counters."""

from __future__ import annotations

import argparse

from ajl.generate import SHAPES, GenConfig, generate
from ajl.predicate_transfer import BloomParams, rpt_orders


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--shape", choices=[s for s in SHAPES if s != "quadratic-adversarial"], default="star")
    p.add_argument("--atoms", type=int, default=4)
    p.add_argument("--tuples", type=int, default=500)
    p.add_argument("--dangling", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    a = p.parse_args()

    inst = generate(GenConfig(a.shape, a.atoms, a.tuples, None, a.dangling, a.seed))
    q = inst.query
    t, per = rpt_orders(q, inst.db, BloomParams(seed=a.seed))
    print(q)
    print(f"root {q.body[t.root].name}, {len(per)} monotone orders")
    outputs = {frozenset(r.tuples) for r, _ in per.values()}
    print(f"distinct outputs across orders: {len(outputs)}")
    rows = sorted(per.items(), key=lambda kv: kv[1][1].total())
    for order, (rel, st) in rows:
        names = " ".join(q.body[i].name for i in order)
        print(f"  {names:<24} out={len(rel):<6} probes={st.hash_probes:<7} materialized={st.tuples_materialized:<7} total={st.total()}")
    totals = [st.total() for _, st in per.values()]
    print(f"spread: {min(totals)}..{max(totals)} ({max(totals) / max(min(totals), 1):.2f}x)")


if __name__ == "__main__":
    main()

#!/usr/bin/env python3
"""Sweep undefined-configuration counts for every one-group metric and
write them as a CSV alongside the closed-form expectations.

    python3 scripts/audit_holes.py --n-max 40 --out results/holes.csv
"""
import argparse
import os
import sys

from cmx import count_holes_closed_form, count_holes_enumerated
from cmx.metrics import MetricId, pt_hole_bounds


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n-min", type=int, default=1)
    parser.add_argument("--n-max", type=int, default=40)
    parser.add_argument("--out", default="results/holes.csv")
    args = parser.parse_args()

    os.makedirs(os.path.dirname(args.out) or ".", exist_ok=True)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("metric,n,holes,closed_form_lower,closed_form_upper\n")
        for metric in MetricId:
            if metric.arity != 1:
                continue
            for n in range(args.n_min, args.n_max + 1):
                holes = count_holes_enumerated(metric, n, cap=max(60, args.n_max))
                if metric is MetricId.PT:
                    if n < 3:
                        continue
                    lower, upper = pt_hole_bounds(n)
                else:
                    lower = upper = count_holes_closed_form(metric, n)
                fh.write(f"{metric.abbrev},{n},{holes},{lower},{upper}\n")
    print(f"wrote {args.out}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Command-line figure renderer for cmx CSV output.

Exit codes: 0 success, 1 runtime error, 2 usage error.
"""
from __future__ import annotations

import argparse
import sys

from .render import KINDS, PlotSpec, render

PROG = "plots"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=PROG,
        description="Render cmx study and score-distribution CSVs as figures.",
    )
    sub = parser.add_subparsers(dest="kind", required=True, metavar="KIND")
    for kind, help_text in (
        ("dist-panel", "bar panel of one score distribution"),
        ("ecdf", "cumulative step curves, one per input distribution"),
        ("mse-curves", "MSE vs n per smoothing policy with 95% bands"),
    ):
        p = sub.add_parser(kind, help=help_text)
        p.add_argument(
            "--in", dest="inputs", required=True, nargs="+", metavar="CSV",
            help="input CSV file(s)",
        )
        p.add_argument("--out", required=True, help="output image path (.png or .svg)")
        p.add_argument("--metric", help="keep only this metric (study CSV)")
        p.add_argument("--group", help="keep only this group (study CSV)")
        p.add_argument("--dpi", type=int, default=150, help="raster resolution")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        spec = PlotSpec(
            inputs=tuple(args.inputs),
            kind=args.kind,
            out=args.out,
            metric=args.metric,
            group=args.group,
            dpi=args.dpi,
        )
        render(spec)
    except (ValueError, OSError) as e:
        print(f"{PROG}: error: {e}", file=sys.stderr)
        return 1
    return 0


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()

"""Command-line entry point: enumerate, holes, match, cps, dist, study.

Exit codes: 0 success, 1 runtime error, 2 usage error.  Diagnostics go
to stderr; data goes to --out (default stdout).
"""
from __future__ import annotations

import argparse
import contextlib
import json
import sys
import warnings

from .core import CellProbabilities, ConfusionMatrix, enumerate_matrices, format_number
from .cps import CpsConfig, smooth
from .experiments import (
    StudyConfig,
    run_study,
    score_distribution,
    write_distribution,
    write_records,
)
from .match import MatchQuery, run_match
from .metrics import (
    MetricId,
    count_holes_closed_form,
    count_holes_enumerated,
    count_holes_enumerated_pair,
    evaluate,
    pt_hole_bounds,
)

PROG = "cmx"


def _parse_four(text: str, what: str) -> tuple[float, float, float, float]:
    parts = text.split(",")
    if len(parts) != 4:
        raise ValueError(f"{what} needs 4 comma-separated values (tp,fn,fp,tn), got {text!r}")
    try:
        return tuple(float(p) for p in parts)
    except ValueError:
        raise ValueError(f"{what} has a non-numeric entry: {text!r}") from None


def _parse_cm(text: str) -> ConfusionMatrix:
    return ConfusionMatrix(*_parse_four(text, "--cm"))


def _parse_probs(text: str) -> CellProbabilities:
    return CellProbabilities.normalized(*_parse_four(text, "probability vector"))


@contextlib.contextmanager
def _sink(args):
    if getattr(args, "out", None):
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            yield fh
    else:
        yield sys.stdout


def _emit_json(obj, fh) -> None:
    json.dump(obj, fh, indent=2)
    fh.write("\n")


def cmd_enumerate(args) -> int:
    with _sink(args) as fh:
        if args.format == "json":
            _emit_json([cm.to_dict() for cm in enumerate_matrices(args.n)], fh)
        else:
            fh.write("tp,fn,fp,tn\n")
            for cm in enumerate_matrices(args.n):
                fh.write(cm.to_csv_row() + "\n")
    return 0


def _hole_row(metric: MetricId, n: int, n2: int | None, cap: int) -> dict:
    if metric.arity == 2:
        if n2 is None:
            raise ValueError(f"{metric.abbrev} is a two-group metric; pass --n2")
        enumerated = count_holes_enumerated_pair(metric, n, n2, cap=cap)
        closed = count_holes_closed_form(metric, n, n2)
        lower = upper = closed
    else:
        enumerated = count_holes_enumerated(metric, n, cap=cap)
        closed = count_holes_closed_form(metric, n) if n >= 1 else None
        if metric is MetricId.PT:
            lower, upper = pt_hole_bounds(n)
        else:
            lower = upper = closed
    return {
        "metric": metric.abbrev,
        "n": n,
        "n2": n2,
        "holes": enumerated,
        "closed_form_lower": lower,
        "closed_form_upper": upper,
    }


def cmd_holes(args) -> int:
    metric = MetricId.from_name(args.metric)
    if args.range:
        lo, _, hi = args.range.partition(":")
        ns = range(int(lo), int(hi) + 1)
    elif args.n is not None:
        ns = [args.n]
    else:
        raise ValueError("pass --n or --range LO:HI")
    rows = [_hole_row(metric, n, args.n2, args.cap) for n in ns]
    with _sink(args) as fh:
        if args.format == "json":
            _emit_json(rows if len(rows) > 1 else rows[0], fh)
        elif len(rows) == 1 and not args.range:
            fh.write(f"{rows[0]['holes']}\n")
        else:
            fh.write("metric,n,n2,holes,closed_form_lower,closed_form_upper\n")
            for r in rows:
                fh.write(
                    f"{r['metric']},{r['n']},{r['n2'] if r['n2'] is not None else ''},"
                    f"{r['holes']},{r['closed_form_lower']},{r['closed_form_upper']}\n"
                )
    return 0


def cmd_match(args) -> int:
    metric = MetricId.from_name(args.metric)
    query = MatchQuery(
        metric=metric,
        n=args.n,
        reference=_parse_probs(args.ref),
        score=args.score,
        cm=_parse_cm(args.cm) if args.cm else None,
    )
    result = run_match(query, method=args.method, force=args.force)
    payload = {"p_leq": result.p_leq, "method": result.method, "error_note": result.error_note}
    if result.p_leq_raw is not None:
        payload["p_leq_raw"] = result.p_leq_raw
    if result.p_two is not None:
        payload["p_two"] = result.p_two
    with _sink(args) as fh:
        if args.format == "csv":
            fh.write(",".join(payload) + "\n")
            fh.write(",".join(str(v) for v in payload.values()) + "\n")
        else:
            _emit_json(payload, fh)
    return 0


def cmd_cps(args) -> int:
    cm = _parse_cm(args.cm)
    config = CpsConfig(lam=args.lam, reference=_parse_probs(args.ref))
    smoothed = smooth(cm, config)
    payload: dict = {"smoothed": smoothed.to_dict(), "lambda": args.lam}
    if args.metrics:
        before_after = {}
        for name in args.metrics.split(","):
            metric = MetricId.from_name(name)
            before = evaluate(metric, cm)
            after = evaluate(metric, smoothed)
            before_after[metric.abbrev] = {
                "before": before.score if before.defined else None,
                "before_undefined": None if before.defined else before.reason,
                "after": after.score if after.defined else None,
                "after_undefined": None if after.defined else after.reason,
            }
        payload["metrics"] = before_after
    with _sink(args) as fh:
        if args.format == "csv":
            fh.write("tp,fn,fp,tn\n")
            fh.write(smoothed.to_csv_row() + "\n")
        else:
            _emit_json(payload, fh)
    return 0


def cmd_dist(args) -> int:
    metric = MetricId.from_name(args.metric)
    dist = score_distribution(
        metric,
        args.n,
        _parse_probs(args.p),
        mode=args.mode,
        reps=args.reps,
        seed=args.seed,
        max_n=args.max_n,
    )
    with _sink(args) as fh:
        if args.format == "json":
            payload = {
                ("undefined" if s is None else format_number(s)): m
                for s, m in sorted(dist.masses.items(), key=lambda kv: (kv[0] is None, kv[0] or 0.0))
            }
            _emit_json(payload, fh)
        else:
            write_distribution(dist, fh)
    return 0


def cmd_study(args) -> int:
    import os

    with open(args.config, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    if args.seed is not None:
        raw["seed"] = args.seed
    cfg = StudyConfig.from_dict(raw, base_dir=os.path.dirname(os.path.abspath(args.config)))
    records = run_study(cfg)
    with _sink(args) as fh:
        if args.format == "json":
            _emit_json([vars(r) for r in records], fh)
        else:
            write_records(records, fh)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=PROG,
        description="Quantify sample-size-induced bias in confusion-matrix metrics.",
    )
    parser.add_argument("--quiet", action="store_true", help="suppress warnings")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add(name, help_text, fn, default_format):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--out", help="output path (default: stdout)")
        p.add_argument(
            "--format", choices=("json", "csv"), default=default_format,
            help=f"output format (default: {default_format})",
        )
        p.set_defaults(func=fn)
        return p

    p = add("enumerate", "list every confusion matrix with cell sum n", cmd_enumerate, "csv")
    p.add_argument("--n", type=int, required=True, help="total sample count")

    p = add("holes", "count matrices on which a metric is undefined", cmd_holes, "csv")
    p.add_argument("--metric", required=True, help="metric abbreviation (e.g. tpr, mcc, f1)")
    p.add_argument("--n", type=int, help="sample count")
    p.add_argument("--n2", type=int, help="second group size (two-group metrics)")
    p.add_argument("--range", help="audit a range of n values, LO:HI inclusive")
    p.add_argument("--cap", type=int, default=60, help="enumeration budget cap (default 60)")

    p = add("match", "percentile of an observed score under a reference model", cmd_match, "json")
    p.add_argument("--metric", required=True, help="binomial metric, JRM, or mb")
    p.add_argument("--n", type=int, required=True, help="target-group size")
    p.add_argument("--score", type=float, help="observed score")
    p.add_argument("--cm", help="observed matrix tp,fn,fp,tn (alternative to --score)")
    p.add_argument("--ref", required=True, help="reference probabilities p_tp,p_fn,p_fp,p_tn")
    p.add_argument(
        "--method", choices=("exact", "normal", "beta", "auto"), default="auto",
        help="computation path (auto: exact for n <= 500)",
    )
    p.add_argument("--force", action="store_true", help="bypass approximation applicability rules")

    p = add("cps", "cross-prior smoothing of a confusion matrix", cmd_cps, "json")
    p.add_argument("--cm", required=True, help="group matrix tp,fn,fp,tn")
    p.add_argument("--ref", required=True, help="reference counts or probabilities tp,fn,fp,tn")
    p.add_argument("--lambda", dest="lam", type=float, default=10.0, help="smoothing strength")
    p.add_argument("--metrics", help="comma-separated metrics to score before/after")

    p = add("dist", "score distribution of a metric over M(n)", cmd_dist, "csv")
    p.add_argument("--metric", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", required=True, help="cell probabilities p_tp,p_fn,p_fp,p_tn")
    p.add_argument("--mode", choices=("exact", "mc"), default="exact")
    p.add_argument("--reps", type=int, default=1_000_000, help="monte-carlo replicates")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-n", type=int, default=60, help="exact-enumeration budget cap")

    p = add("study", "run a downsampling study from a JSON config", cmd_study, "csv")
    p.add_argument("--config", required=True, help="StudyConfig JSON file")
    p.add_argument("--seed", type=int, help="override the config seed")

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    if args.quiet:
        warnings.simplefilter("ignore")
    try:
        return args.func(args)
    except (ValueError, OSError, RuntimeError, json.JSONDecodeError) as e:
        print(f"{PROG}: error: {e}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()

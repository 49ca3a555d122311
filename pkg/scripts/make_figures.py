#!/usr/bin/env python3
"""End-to-end figure pipeline: run a small study, dump exact score
distributions, and render all three figure kinds with the plots CLI.

    python3 scripts/make_figures.py --out-dir results/figures
"""
import argparse
import os
import subprocess
import sys


def run(*argv):
    print("+", " ".join(argv), file=sys.stderr)
    subprocess.run(argv, check=True)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out-dir", default="results/figures")
    parser.add_argument("--replicates", type=int, default=2000)
    parser.add_argument("--metric", default="tpr")
    parser.add_argument("--group", default="Black")
    args = parser.parse_args()

    out = args.out_dir
    os.makedirs(out, exist_ok=True)
    study = os.path.join(out, "study.csv")
    run(
        sys.executable, os.path.join(os.path.dirname(__file__), "run_compas_study.py"),
        "--replicates", str(args.replicates), "--n-max", "50", "--out", study,
    )

    dists = []
    for n in (10, 20, 40):
        path = os.path.join(out, f"dist-n{n}.csv")
        run(
            "cmx", "dist", "--metric", args.metric, "--n", str(n),
            "--p", "0.09,0.33,0.05,0.53", "--out", path,
        )
        dists.append(path)

    run("plots", "dist-panel", "--in", dists[0],
        "--out", os.path.join(out, "dist-panel.png"))
    run("plots", "ecdf", "--in", *dists,
        "--out", os.path.join(out, "ecdf.png"))
    run("plots", "mse-curves", "--in", study,
        "--metric", args.metric, "--group", args.group,
        "--out", os.path.join(out, "mse-curves.png"))
    print(f"figures written under {out}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())

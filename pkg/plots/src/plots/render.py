"""Render study and score-distribution CSV files as figures.

Consumes only the CSV schemas written by the cmx CLI:
  study CSV:  group,metric,n,policy,replicates,mse,ci95_halfwidth,undefined_rate
  dist CSV:   score,mass   (one row may carry the label "undefined")

Output is deterministic: identical inputs and dpi give identical image
bytes, so SVG ids are salted with a fixed string and date metadata is
suppressed.
"""
from __future__ import annotations

import csv
import os
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

plt.rcParams["svg.hashsalt"] = "cmx-plots"

KINDS = ("dist-panel", "ecdf", "mse-curves")

STUDY_COLUMNS = [
    "group", "metric", "n", "policy", "replicates", "mse", "ci95_halfwidth", "undefined_rate"
]
DIST_COLUMNS = ["score", "mass"]


@dataclass(frozen=True)
class PlotSpec:
    """One rendering job: inputs, figure kind, filters, output image."""

    inputs: tuple[str, ...]
    kind: str
    out: str
    metric: str | None = None
    group: str | None = None
    dpi: int = 150

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}; expected one of {KINDS}")
        if not self.inputs:
            raise ValueError("at least one input CSV is required")
        for path in self.inputs:
            if not os.path.exists(path):
                raise ValueError(f"input file not found: {path}")
        if self.dpi < 1:
            raise ValueError(f"dpi must be positive, got {self.dpi}")


def _read_csv(path: str, expected: list[str]) -> list[dict]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        got = [c.strip() for c in reader.fieldnames or []]
        if got != expected:
            raise ValueError(
                f"{path}: expected columns {','.join(expected)}, got {','.join(got)}"
            )
        rows = list(reader)
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return rows


def load_study(path: str) -> list[dict]:
    """Parse a study CSV into typed rows."""
    rows = _read_csv(path, STUDY_COLUMNS)
    return [
        {
            "group": r["group"],
            "metric": r["metric"],
            "n": int(r["n"]),
            "policy": r["policy"],
            "replicates": int(r["replicates"]),
            "mse": float(r["mse"]),
            "ci95_halfwidth": float(r["ci95_halfwidth"]),
            "undefined_rate": float(r["undefined_rate"]),
        }
        for r in rows
    ]


def load_dist(path: str) -> tuple[list[tuple[float, float]], float]:
    """Parse a dist CSV into ((score, mass) pairs sorted by score, undefined mass)."""
    rows = _read_csv(path, DIST_COLUMNS)
    points = []
    undefined = 0.0
    for r in rows:
        mass = float(r["mass"])
        if r["score"] == "undefined":
            undefined += mass
        else:
            points.append((float(r["score"]), mass))
    points.sort()
    return points, undefined


def _save(fig, spec: PlotSpec) -> None:
    ext = os.path.splitext(spec.out)[1].lower().lstrip(".")
    if ext not in ("png", "svg"):
        raise ValueError(f"output must be a .png or .svg path, got {spec.out!r}")
    metadata = {"Date": None} if ext == "svg" else {}
    fig.savefig(spec.out, dpi=spec.dpi, format=ext, metadata=metadata)
    plt.close(fig)


def render_dist_panel(spec: PlotSpec) -> None:
    """Bar panel of one score distribution; the undefined bucket, when
    present, is drawn as a separate hatched bar past the score axis."""
    if len(spec.inputs) != 1:
        raise ValueError("dist-panel takes exactly one input CSV")
    points, undefined = load_dist(spec.inputs[0])
    fig, ax = plt.subplots(figsize=(7, 4))
    if points:
        scores = [s for s, _ in points]
        masses = [m for _, m in points]
        span = (max(scores) - min(scores)) or 1.0
        width = max(span / (4 * len(points)), span * 0.004)
        ax.bar(scores, masses, width=width, color="#33658a", label="defined scores")
    if undefined > 0:
        right = (max(s for s, _ in points) if points else 0.0) + 0.1
        ax.bar([right], [undefined], width=0.05, color="#d1495b", hatch="//",
               label="undefined")
    ax.set_xlabel("score")
    ax.set_ylabel("probability mass")
    ax.set_title(os.path.basename(spec.inputs[0]))
    ax.legend()
    _save(fig, spec)


def render_ecdf(spec: PlotSpec) -> None:
    """Step-curve ECDF overlay, one curve per input distribution,
    normalized over defined outcomes."""
    fig, ax = plt.subplots(figsize=(7, 4))
    for path in spec.inputs:
        points, _ = load_dist(path)
        if not points:
            raise ValueError(f"{path}: no defined scores to plot")
        total = sum(m for _, m in points)
        xs, ys, acc = [], [], 0.0
        for s, m in points:
            acc += m
            xs.append(s)
            ys.append(acc / total)
        label = os.path.splitext(os.path.basename(path))[0]
        ax.step(xs, ys, where="post", label=label)
    ax.set_xlabel("score")
    ax.set_ylabel("cumulative probability")
    ax.set_ylim(0, 1.05)
    ax.legend()
    _save(fig, spec)


def render_mse_curves(spec: PlotSpec) -> None:
    """MSE versus sample size, one line per smoothing policy, with the
    95% confidence half-width shaded around each line."""
    if len(spec.inputs) != 1:
        raise ValueError("mse-curves takes exactly one input CSV")
    rows = load_study(spec.inputs[0])
    if spec.metric is not None:
        rows = [r for r in rows if r["metric"] == spec.metric]
    if spec.group is not None:
        rows = [r for r in rows if r["group"] == spec.group]
    if not rows:
        raise ValueError(
            f"{spec.inputs[0]}: no rows left after filtering "
            f"(metric={spec.metric!r}, group={spec.group!r})"
        )
    metrics = sorted({r["metric"] for r in rows})
    groups = sorted({r["group"] for r in rows})
    if len(metrics) > 1:
        raise ValueError(f"several metrics present ({', '.join(metrics)}); pass --metric")
    if len(groups) > 1:
        raise ValueError(f"several groups present ({', '.join(groups)}); pass --group")

    fig, ax = plt.subplots(figsize=(7, 4))
    for policy in sorted({r["policy"] for r in rows}):
        series = sorted((r["n"], r["mse"], r["ci95_halfwidth"]) for r in rows
                        if r["policy"] == policy)
        ns = [n for n, _, _ in series]
        mses = [m for _, m, _ in series]
        los = [m - c for _, m, c in series]
        his = [m + c for _, m, c in series]
        ax.plot(ns, mses, marker="o", label=policy)
        ax.fill_between(ns, los, his, alpha=0.25)
    ax.set_xlabel("sample size n")
    ax.set_ylabel("MSE")
    ax.set_title(f"{metrics[0]} / {groups[0]}")
    ax.legend(title="policy")
    _save(fig, spec)


_RENDERERS = {
    "dist-panel": render_dist_panel,
    "ecdf": render_ecdf,
    "mse-curves": render_mse_curves,
}


def render(spec: PlotSpec) -> None:
    _RENDERERS[spec.kind](spec)

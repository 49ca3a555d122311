"""Monte-Carlo downsampling harness: score distributions, MSE-vs-n
smoothing studies, dataset ingestion, and CSV persistence.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .core import CellProbabilities, ConfusionMatrix, enumerate_matrices_array, log_pmf_array
from .metrics import MetricId, evaluate, evaluate_batch

EXACT_ENUMERATION_CAP = 60
THREADS_ENV_VAR = "CMX_THREADS"
SCORE_KEY_DECIMALS = 12

# the fifteen one-group metrics of the downsampling experiments
STUDY_METRICS = (
    MetricId.TPR, MetricId.FPR, MetricId.TNR, MetricId.FNR,
    MetricId.PPV, MetricId.NPV, MetricId.FDR, MetricId.FOR,
    MetricId.ACC, MetricId.PREV, MetricId.PPR,
    MetricId.MARGINAL_BENEFIT, MetricId.MCC, MetricId.F1_SIMPLIFIED, MetricId.PT,
)

RECORD_FIELDS = (
    "group", "metric", "n", "policy", "replicates", "mse", "ci95_halfwidth", "undefined_rate"
)


@dataclass(frozen=True)
class Policy:
    """Smoothing policy for a study: none, additive(eps), or cps(lam)."""

    kind: str
    param: float = 0.0

    def __post_init__(self):
        if self.kind not in ("none", "additive", "cps"):
            raise ValueError(f"unknown policy kind {self.kind!r}")
        if self.param < 0:
            raise ValueError(f"policy parameter must be >= 0, got {self.param}")

    def label(self) -> str:
        if self.kind == "none":
            return "none"
        return f"{self.kind}({self.param:g})"

    @classmethod
    def from_dict(cls, d: dict) -> "Policy":
        kind = d.get("kind")
        if kind == "none":
            return cls("none")
        if kind == "additive":
            return cls("additive", float(d.get("eps", 1e-10)))
        if kind == "cps":
            return cls("cps", float(d.get("lambda", 10.0)))
        raise ValueError(f"unknown policy kind {kind!r}")


@dataclass(frozen=True)
class GroupSpec:
    """A named group with its whole-group confusion matrix.

    Cells may be raw counts or proportions; only the normalized cell
    proportions matter for sampling.
    """

    name: str
    cm: ConfusionMatrix

    def proportions(self) -> CellProbabilities:
        return self.cm.proportions()


@dataclass(frozen=True)
class StudyConfig:
    groups: tuple[GroupSpec, ...]
    metrics: tuple[MetricId, ...] = STUDY_METRICS
    n_values: tuple[int, ...] = tuple(range(5, 151, 5))
    replicates: int = 10_000
    policies: tuple[Policy, ...] = (Policy("additive", 1e-10), Policy("cps", 10.0))
    seed: int = 0

    def __post_init__(self):
        if not self.groups:
            raise ValueError("a study needs at least one group")
        names = [g.name for g in self.groups]
        if len(set(names)) != len(names):
            raise ValueError("group names must be unique within a study")
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be a non-negative integer")
        if any(n < 1 for n in self.n_values):
            raise ValueError("sample sizes must be >= 1")
        if any(m.arity != 1 for m in self.metrics):
            raise ValueError("two-group metrics are not part of the downsampling study")

    @classmethod
    def from_dict(cls, d: dict, base_dir: str = ".") -> "StudyConfig":
        groups_field = d["groups"]
        if isinstance(groups_field, str):
            groups = tuple(ingest_groups(os.path.join(base_dir, groups_field)))
        else:
            groups = tuple(
                GroupSpec(g["name"], ConfusionMatrix.from_dict(g)) for g in groups_field
            )
        kwargs: dict = {"groups": groups}
        if "metrics" in d:
            kwargs["metrics"] = tuple(MetricId.from_name(m) for m in d["metrics"])
        if "n_range" in d:
            r = d["n_range"]
            lo, hi = int(r[0]), int(r[1])
            step = int(r[2]) if len(r) > 2 else 1
            kwargs["n_values"] = tuple(range(lo, hi + 1, step))
        if "n_values" in d:
            kwargs["n_values"] = tuple(int(n) for n in d["n_values"])
        if "replicates" in d:
            kwargs["replicates"] = int(d["replicates"])
        if "smoothing_policies" in d:
            kwargs["policies"] = tuple(Policy.from_dict(p) for p in d["smoothing_policies"])
        if "seed" in d:
            kwargs["seed"] = int(d["seed"])
        return cls(**kwargs)


@dataclass(frozen=True)
class ExperimentRecord:
    """One Monte-Carlo measurement row."""

    group: str
    metric: str
    n: int
    policy: str
    replicates: int
    mse: float
    ci95_halfwidth: float
    undefined_rate: float


@dataclass
class ScoreDistribution:
    """Histogram of metric scores (plus an undefined bucket) to mass."""

    masses: dict  # float | None -> float

    @property
    def undefined_mass(self) -> float:
        return self.masses.get(None, 0.0)

    @property
    def support_size(self) -> int:
        return sum(1 for k in self.masses if k is not None)

    def total_mass(self) -> float:
        return sum(self.masses.values())

    def mean_defined(self) -> float:
        """Expected score conditioned on the metric being defined."""
        num = sum(s * m for s, m in self.masses.items() if s is not None)
        den = self.total_mass() - self.undefined_mass
        if den <= 0:
            raise ValueError("no defined outcomes in this distribution")
        return num / den


def _tally(scores: np.ndarray, defined: np.ndarray, weights: np.ndarray) -> ScoreDistribution:
    masses: dict = {}
    undef = float(weights[~defined].sum())
    if undef > 0:
        masses[None] = undef
    vals = np.round(scores[defined], SCORE_KEY_DECIMALS)
    w = weights[defined]
    uniq, inv = np.unique(vals, return_inverse=True)
    sums = np.bincount(inv, weights=w, minlength=len(uniq))
    for v, m in zip(uniq, sums):
        masses[float(v) + 0.0] = float(m)  # +0.0 folds -0.0 into 0.0
    return ScoreDistribution(masses)


def score_distribution(
    metric: MetricId,
    n: int,
    p: CellProbabilities,
    mode: str = "exact",
    reps: int = 1_000_000,
    seed: int = 0,
    max_n: int = EXACT_ENUMERATION_CAP,
) -> ScoreDistribution:
    """Distribution of a metric's score over M(n) under cell probabilities p.

    Exact mode sums the multinomial PMF over the full enumeration (budget
    capped at max_n); monte-carlo mode draws multinomial samples.
    """
    if metric.arity != 1:
        raise ValueError("score distributions cover one-group metrics")
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    if mode == "exact":
        if n > max_n:
            raise ValueError(
                f"exact enumeration at n={n} exceeds the budget cap {max_n}; "
                "raise max_n explicitly or use monte-carlo mode"
            )
        cells = enumerate_matrices_array(n)
        weights = np.exp(log_pmf_array(cells, p))
        scores, defined = evaluate_batch(metric, cells)
        return _tally(scores, defined, weights)
    if mode in ("monte-carlo", "mc"):
        if reps < 1:
            raise ValueError("reps must be >= 1")
        rng = np.random.default_rng(seed)
        cells = rng.multinomial(n, p.as_tuple(), size=reps).astype(np.float64)
        scores, defined = evaluate_batch(metric, cells)
        weights = np.full(reps, 1.0 / reps)
        return _tally(scores, defined, weights)
    raise ValueError(f"unknown mode {mode!r}")


def _apply_policy(counts: np.ndarray, n: int, policy: Policy, ref: np.ndarray | None) -> np.ndarray:
    if policy.kind == "none":
        return counts
    if policy.kind == "additive":
        return counts + policy.param
    lam = policy.param
    if lam == 0.0:
        return counts
    if ref is None:
        raise ValueError("cps policy needs a reference, but none is available")
    return (counts + lam * ref) / (n + lam) * n


def _leave_one_out_references(groups: tuple[GroupSpec, ...]) -> dict[str, np.ndarray | None]:
    """Per-group CPS prior: the cellwise aggregate of all other groups."""
    totals = np.array([g.cm.cells for g in groups], dtype=np.float64)
    grand = totals.sum(axis=0)
    refs: dict[str, np.ndarray | None] = {}
    for g, row in zip(groups, totals):
        rest = grand - row
        refs[g.name] = rest / rest.sum() if rest.sum() > 0 else None
    return refs


def run_study(cfg: StudyConfig) -> list[ExperimentRecord]:
    """Run the downsampling study: for each (group, metric, n, policy),
    draw multinomial samples, apply the policy, and measure the MSE of
    the metric against the whole-group score.

    Deterministic given the seed: every task owns an RNG stream derived
    from (seed, task index), so thread count cannot change the records.
    Undefined outcomes are excluded from the MSE and tallied separately.
    """
    truths: dict[tuple[str, str], float] = {}
    for g in cfg.groups:
        cm = ConfusionMatrix(*g.proportions().as_tuple())
        for m in cfg.metrics:
            res = evaluate(m, cm)
            if not res.defined:
                raise ValueError(
                    f"whole-group score of {m.abbrev} is undefined for group "
                    f"{g.name!r}: {res.reason}"
                )
            truths[(g.name, m.abbrev)] = res.score

    refs = _leave_one_out_references(cfg.groups)

    tasks = [
        (index, g, m, n, policy)
        for index, (g, m, n, policy) in enumerate(
            (g, m, n, policy)
            for g in cfg.groups
            for m in cfg.metrics
            for n in cfg.n_values
            for policy in cfg.policies
        )
    ]

    def run_task(task) -> ExperimentRecord:
        index, g, m, n, policy = task
        rng = np.random.default_rng([cfg.seed, index])
        counts = rng.multinomial(n, g.proportions().as_tuple(), size=cfg.replicates)
        cells = _apply_policy(counts.astype(np.float64), n, policy, refs[g.name])
        scores, defined = evaluate_batch(m, cells)
        truth = truths[(g.name, m.abbrev)]
        sq = (scores[defined] - truth) ** 2
        count = sq.size
        mse = float(sq.mean()) if count else math.nan
        ci = float(1.96 * sq.std(ddof=1) / math.sqrt(count)) if count > 1 else 0.0
        return ExperimentRecord(
            group=g.name,
            metric=m.abbrev,
            n=n,
            policy=policy.label(),
            replicates=cfg.replicates,
            mse=mse,
            ci95_halfwidth=ci,
            undefined_rate=1.0 - count / cfg.replicates,
        )

    threads = int(os.environ.get(THREADS_ENV_VAR, "1") or "1")
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(run_task, tasks))
    else:
        records = [run_task(t) for t in tasks]
    return records


def ingest_groups(path: str, format: str | None = None) -> list[GroupSpec]:
    """Load group confusion matrices from a CSV or JSON file.

    CSV needs the header name,tp,fn,fp,tn; JSON is an array of objects
    with the same fields.  Cells may be counts or proportions.
    """
    if format is None:
        format = "json" if str(path).lower().endswith(".json") else "csv"
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    if not text.strip():
        raise ValueError(f"{path}: file is empty")
    if format == "json":
        try:
            payload = json.loads(text)
        except json.JSONDecodeError as e:
            raise ValueError(f"{path}: invalid JSON: {e}") from None
        if not isinstance(payload, list) or not payload:
            raise ValueError(f"{path}: expected a non-empty JSON array of groups")
        groups = []
        for idx, entry in enumerate(payload):
            groups.append(_build_group(entry, f"{path}: entry {idx}"))
        return groups
    if format == "csv":
        reader = csv.DictReader(io.StringIO(text))
        expected = ["name", "tp", "fn", "fp", "tn"]
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != expected:
            raise ValueError(
                f"{path}: expected header {','.join(expected)}, got "
                f"{','.join(reader.fieldnames or [])}"
            )
        groups = []
        for lineno, row in enumerate(reader, start=2):
            groups.append(_build_group(row, f"{path}:{lineno}"))
        if not groups:
            raise ValueError(f"{path}: no data rows")
        return groups
    raise ValueError(f"unknown format {format!r}")


def _build_group(entry: dict, where: str) -> GroupSpec:
    name = entry.get("name")
    if not name:
        raise ValueError(f"{where}: missing group name")
    cells = {}
    for fieldname in ("tp", "fn", "fp", "tn"):
        raw = entry.get(fieldname)
        if raw is None or raw == "":
            raise ValueError(f"{where}: missing field {fieldname!r}")
        try:
            value = float(raw)
        except (TypeError, ValueError):
            raise ValueError(f"{where}: field {fieldname!r} is not a number: {raw!r}") from None
        if value < 0:
            raise ValueError(f"{where}: field {fieldname!r} must be >= 0, got {value}")
        cells[fieldname] = value
    return GroupSpec(str(name), ConfusionMatrix(**cells))


def compas_groups() -> list[GroupSpec]:
    """The bundled COMPAS fixture (two groups, proportion-valued cells)."""
    ref = resources.files("cmx").joinpath("data/compas.csv")
    with resources.as_file(ref) as path:
        return ingest_groups(str(path), format="csv")


def write_records(records: list[ExperimentRecord], path_or_file) -> None:
    """Write study records as CSV with a stable (group, metric, n, policy)
    ordering and 10-significant-digit floats."""
    if not records:
        raise ValueError("no records to write")
    ordered = sorted(records, key=lambda r: (r.group, r.metric, r.n, r.policy))
    own = isinstance(path_or_file, (str, os.PathLike))
    fh = open(path_or_file, "w", encoding="utf-8", newline="") if own else path_or_file
    try:
        fh.write(",".join(RECORD_FIELDS) + "\n")
        for r in ordered:
            fh.write(
                ",".join(
                    [
                        r.group,
                        r.metric,
                        str(r.n),
                        r.policy,
                        str(r.replicates),
                        format(r.mse, ".10g"),
                        format(r.ci95_halfwidth, ".10g"),
                        format(r.undefined_rate, ".10g"),
                    ]
                )
                + "\n"
            )
    except OSError as e:
        raise OSError(f"failed writing records to {path_or_file}: {e}") from e
    finally:
        if own:
            fh.close()


def write_distribution(dist: ScoreDistribution, path_or_file) -> None:
    """Write a score distribution as CSV rows of score,mass ("undefined"
    labels the hole bucket); scores ascend."""
    items = sorted(
        dist.masses.items(), key=lambda kv: (kv[0] is None, kv[0] if kv[0] is not None else 0.0)
    )
    own = isinstance(path_or_file, (str, os.PathLike))
    fh = open(path_or_file, "w", encoding="utf-8", newline="") if own else path_or_file
    try:
        fh.write("score,mass\n")
        for score, mass in items:
            label = "undefined" if score is None else format(score, ".10g")
            fh.write(f"{label},{format(mass, '.10g')}\n")
    finally:
        if own:
            fh.close()

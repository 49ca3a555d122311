"""The 21 confusion-matrix metrics with explicit undefined-case semantics.

A metric that hits a zero denominator (a "hole") returns an Undefined
result carrying the reason; it never raises and never yields NaN, so
hole counts and Monte-Carlo aggregates stay honest.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .core import ConfusionMatrix, enumerate_matrices_array, space_cardinality

# zero test for denominators of real-valued (smoothed) matrices;
# integral matrices compare exactly
DEN_TOL = 1e-12

EULER_GAMMA = 0.5772156649015329

HOLE_BUDGET_CAP = 60


class Family(enum.Enum):
    BINOMIAL = "binomial"
    JRM = "jrm"
    OTHER = "other"


class MetricId(enum.Enum):
    """One of the 21 metrics; value is (abbrev, family, arity)."""

    ACC = ("acc", Family.BINOMIAL, 1)
    PREV = ("prev", Family.BINOMIAL, 1)
    PPR = ("ppr", Family.BINOMIAL, 1)
    INACC = ("inacc", Family.BINOMIAL, 1)
    NPREV = ("nprev", Family.BINOMIAL, 1)
    PNR = ("pnr", Family.BINOMIAL, 1)
    TPR = ("tpr", Family.JRM, 1)
    FPR = ("fpr", Family.JRM, 1)
    TNR = ("tnr", Family.JRM, 1)
    FNR = ("fnr", Family.JRM, 1)
    PPV = ("ppv", Family.JRM, 1)
    NPV = ("npv", Family.JRM, 1)
    FDR = ("fdr", Family.JRM, 1)
    FOR = ("for", Family.JRM, 1)
    F1_ORIGINAL = ("f1-original", Family.OTHER, 1)
    F1_SIMPLIFIED = ("f1", Family.OTHER, 1)
    MCC = ("mcc", Family.OTHER, 1)
    PT = ("pt", Family.OTHER, 1)
    MARGINAL_BENEFIT = ("mb", Family.OTHER, 1)
    OFI = ("ofi", Family.OTHER, 2)
    TREATMENT_EQUALITY = ("te", Family.OTHER, 2)

    @property
    def abbrev(self) -> str:
        return self.value[0]

    @property
    def family(self) -> Family:
        return self.value[1]

    @property
    def arity(self) -> int:
        return self.value[2]

    @classmethod
    def from_name(cls, name: str) -> "MetricId":
        key = name.strip().lower()
        try:
            return _NAME_TO_METRIC[key]
        except KeyError:
            raise ValueError(f"unknown metric name {name!r}") from None


_NAME_TO_METRIC = {m.abbrev: m for m in MetricId}

ONE_GROUP_METRICS = tuple(m for m in MetricId if m.arity == 1)
TWO_GROUP_METRICS = tuple(m for m in MetricId if m.arity == 2)

# cell indices into (tp, fn, fp, tn): binomial metric = (c_i + c_j) / n
BINOMIAL_CELLS = {
    MetricId.ACC: (0, 3),
    MetricId.PREV: (0, 1),
    MetricId.PPR: (0, 2),
    MetricId.INACC: (2, 1),
    MetricId.NPREV: (3, 2),
    MetricId.PNR: (3, 1),
}

# JRM = c_i / (c_i + c_j)
JRM_CELLS = {
    MetricId.TPR: (0, 1),
    MetricId.FPR: (2, 3),
    MetricId.TNR: (3, 2),
    MetricId.FNR: (1, 0),
    MetricId.PPV: (0, 2),
    MetricId.NPV: (3, 1),
    MetricId.FDR: (2, 0),
    MetricId.FOR: (1, 3),
}

_CELL_LABELS = ("TP", "FN", "FP", "TN")


@dataclass(frozen=True)
class MetricResult:
    """Either a real score or an explicit Undefined marker."""

    score: float | None
    reason: str | None = None

    @property
    def defined(self) -> bool:
        return self.score is not None

    @classmethod
    def of(cls, score: float) -> "MetricResult":
        return cls(score=float(score))

    @classmethod
    def undefined(cls, reason: str) -> "MetricResult":
        return cls(score=None, reason=reason)


def _is_zero(x: float, integral: bool) -> bool:
    return x == 0.0 if integral else abs(x) < DEN_TOL


def evaluate(metric: MetricId, cm: ConfusionMatrix, eps: float = 0.0) -> MetricResult:
    """Evaluate a one-group metric, optionally with additive smoothing.

    `eps` is added to every cell before evaluation (0 disables it, 1e-10
    is the "bashful" baseline, 1 the add-one prior).
    """
    if metric.arity != 1:
        raise ValueError(f"{metric.name} is a two-group metric; use evaluate_pair")
    if eps < 0:
        raise ValueError(f"eps must be >= 0, got {eps}")
    tp, fn, fp, tn = (c + eps for c in cm.cells)
    n = tp + fn + fp + tn
    integral = eps == 0.0 and cm.is_integral
    if n == 0:
        return MetricResult.undefined("n=0")

    if metric.family is Family.BINOMIAL:
        i, j = BINOMIAL_CELLS[metric]
        cells = (tp, fn, fp, tn)
        return MetricResult.of((cells[i] + cells[j]) / n)

    if metric.family is Family.JRM:
        i, j = JRM_CELLS[metric]
        cells = (tp, fn, fp, tn)
        den = cells[i] + cells[j]
        if _is_zero(den, integral):
            return MetricResult.undefined(f"{_CELL_LABELS[i]}+{_CELL_LABELS[j]}=0")
        return MetricResult.of(cells[i] / den)

    if metric is MetricId.MARGINAL_BENEFIT:
        return MetricResult.of((fp - fn) / n)

    if metric is MetricId.F1_ORIGINAL:
        if _is_zero(tp, integral):
            return MetricResult.undefined("TP=0")
        return MetricResult.of(2.0 / ((tp + fp) / tp + (tp + fn) / tp))

    if metric is MetricId.F1_SIMPLIFIED:
        den = 2 * tp + fp + fn
        if _is_zero(den, integral):
            return MetricResult.undefined("2TP+FP+FN=0")
        return MetricResult.of(2 * tp / den)

    if metric is MetricId.MCC:
        sums = {
            "TP+FP": tp + fp,
            "TP+FN": tp + fn,
            "TN+FP": tn + fp,
            "TN+FN": tn + fn,
        }
        for label, s in sums.items():
            if _is_zero(s, integral):
                return MetricResult.undefined(f"{label}=0")
        num = tp * tn - fp * fn
        den = math.sqrt((tp + fp) * (tp + fn) * (tn + fp) * (tn + fn))
        return MetricResult.of(num / den)

    if metric is MetricId.PT:
        pos = tp + fn
        neg = fp + tn
        if _is_zero(pos, integral):
            return MetricResult.undefined("TPR undefined (TP+FN=0)")
        if _is_zero(neg, integral):
            return MetricResult.undefined("FPR undefined (FP+TN=0)")
        tpr = tp / pos
        fpr = fp / neg
        if integral:
            # exact rational test: TPR == FPR iff TP*TN == FP*FN
            equal = round(tp) * round(tn) == round(fp) * round(fn)
        else:
            equal = abs(tpr - fpr) < DEN_TOL
        if equal:
            return MetricResult.undefined("TPR-FPR=0")
        return MetricResult.of((math.sqrt(tpr * fpr) - fpr) / (tpr - fpr))

    raise AssertionError(f"unhandled metric {metric}")


def evaluate_pair(
    metric: MetricId,
    cm1: ConfusionMatrix,
    cm2: ConfusionMatrix,
    eps: float = 0.0,
) -> MetricResult:
    """Evaluate a two-group metric (OFI or Treatment Equality)."""
    if metric.arity != 2:
        raise ValueError(f"{metric.name} is a one-group metric; use evaluate")

    if metric is MetricId.OFI:
        b1 = evaluate(MetricId.MARGINAL_BENEFIT, cm1, eps)
        b2 = evaluate(MetricId.MARGINAL_BENEFIT, cm2, eps)
        if not b1.defined:
            return MetricResult.undefined(f"group 1: {b1.reason}")
        if not b2.defined:
            return MetricResult.undefined(f"group 2: {b2.reason}")
        return MetricResult.of(b1.score - b2.score)

    if metric is MetricId.TREATMENT_EQUALITY:
        fp1 = cm1.fp + eps
        fp2 = cm2.fp + eps
        integral = eps == 0.0 and cm1.is_integral and cm2.is_integral
        if _is_zero(fp1, integral):
            return MetricResult.undefined("FP_1=0")
        if _is_zero(fp2, integral):
            return MetricResult.undefined("FP_2=0")
        return MetricResult.of((cm1.fn + eps) / fp1 - (cm2.fn + eps) / fp2)

    raise AssertionError(f"unhandled metric {metric}")


def evaluate_batch(metric: MetricId, cells: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized one-group evaluation over an (N, 4) cell array.

    Returns (scores, defined): scores is float64 with NaN where the
    metric is undefined, defined the boolean mask of valid rows.
    Denominators within DEN_TOL of zero count as holes, which matches
    the exact integral rule whenever the inputs are counts.
    """
    if metric.arity != 1:
        raise ValueError(f"{metric.name} is a two-group metric")
    cells = np.asarray(cells, dtype=np.float64)
    if cells.ndim != 2 or cells.shape[1] != 4:
        raise ValueError(f"expected an (N, 4) array, got shape {cells.shape}")
    tp, fn, fp, tn = cells[:, 0], cells[:, 1], cells[:, 2], cells[:, 3]
    n = tp + fn + fp + tn
    alive = n > DEN_TOL

    with np.errstate(divide="ignore", invalid="ignore"):
        if metric.family is Family.BINOMIAL:
            i, j = BINOMIAL_CELLS[metric]
            defined = alive
            scores = (cells[:, i] + cells[:, j]) / n
        elif metric.family is Family.JRM:
            i, j = JRM_CELLS[metric]
            den = cells[:, i] + cells[:, j]
            defined = alive & (den > DEN_TOL)
            scores = cells[:, i] / den
        elif metric is MetricId.MARGINAL_BENEFIT:
            defined = alive
            scores = (fp - fn) / n
        elif metric is MetricId.F1_ORIGINAL:
            defined = alive & (tp > DEN_TOL)
            scores = 2 * tp / (2 * tp + fp + fn)
        elif metric is MetricId.F1_SIMPLIFIED:
            den = 2 * tp + fp + fn
            defined = alive & (den > DEN_TOL)
            scores = 2 * tp / den
        elif metric is MetricId.MCC:
            s1, s2, s3, s4 = tp + fp, tp + fn, tn + fp, tn + fn
            defined = alive & (s1 > DEN_TOL) & (s2 > DEN_TOL) & (s3 > DEN_TOL) & (s4 > DEN_TOL)
            scores = (tp * tn - fp * fn) / np.sqrt(s1 * s2 * s3 * s4)
        elif metric is MetricId.PT:
            pos, neg = tp + fn, fp + tn
            ok = alive & (pos > DEN_TOL) & (neg > DEN_TOL)
            tpr = tp / pos
            fpr = fp / neg
            # equal rationals round to identical doubles, so this matches
            # the exact TP*TN == FP*FN test on count inputs
            defined = ok & (np.abs(tpr - fpr) >= DEN_TOL)
            scores = (np.sqrt(tpr * fpr) - fpr) / (tpr - fpr)
        else:
            raise AssertionError(f"unhandled metric {metric}")

    scores = np.where(defined, scores, np.nan)
    return scores, defined


def count_holes_enumerated(metric: MetricId, n: int, cap: int = HOLE_BUDGET_CAP) -> int:
    """Exact number of matrices in M(n) on which the metric is undefined."""
    if metric.arity != 1:
        raise ValueError("use count_holes_enumerated_pair for two-group metrics")
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    if n > cap:
        raise ValueError(f"n={n} exceeds the enumeration budget cap {cap}")
    if n == 0:
        return 1  # the zero matrix: every metric is undefined at n=0
    cells = enumerate_matrices_array(n)
    _, defined = evaluate_batch(metric, cells)
    return int((~defined).sum())


def count_holes_enumerated_pair(
    metric: MetricId, n1: int, n2: int, cap: int = HOLE_BUDGET_CAP
) -> int:
    """Undefined-configuration count for a two-group metric.

    Follows the counting convention of the closed form: the per-group
    hole configurations are enumerated independently and summed, with a
    single correction for the shared both-groups-degenerate case.  (The
    cartesian pair count would instead be h1*|M(n2)| + h2*|M(n1)| -
    h1*h2.)
    """
    if metric.arity != 2:
        raise ValueError(f"{metric.name} is a one-group metric")
    for n in (n1, n2):
        if n < 1:
            raise ValueError(f"group sizes must be >= 1, got {n}")
        if n > cap:
            raise ValueError(f"n={n} exceeds the enumeration budget cap {cap}")

    if metric is MetricId.OFI:
        return 0  # marginal benefit is defined on every non-empty group

    # Treatment Equality: hole iff FP_1 = 0 or FP_2 = 0
    h1 = int((enumerate_matrices_array(n1)[:, 2] == 0).sum())
    h2 = int((enumerate_matrices_array(n2)[:, 2] == 0).sum())
    return h1 + h2 - 1


def pt_hole_bounds(n: int) -> tuple[int, int]:
    """Lower/upper bounds for Prevalence Threshold holes (n >= 3).

    Lower bound 2n+2 counts the TPR and FPR holes; the upper bound is
    the divisor-sum bound ceil(e^gamma * n * ln ln n + 0.6483 n / ln ln n).
    """
    if n < 3:
        raise ValueError(f"PT hole bounds require n >= 3, got {n}")
    lll = math.log(math.log(n))
    upper = math.exp(EULER_GAMMA) * n * lll + 0.6483 * n / lll
    return 2 * n + 2, math.ceil(upper)


def count_holes_closed_form(metric: MetricId, n: int, n2: int | None = None):
    """Closed-form hole count per metric, for n >= 1.

    Returns an integer for every metric except PT, whose exact count is
    open; PT returns the (lower, upper) bounds pair from pt_hole_bounds.
    Treatment Equality requires the second group size n2.
    """
    if n < 1:
        raise ValueError(f"closed forms hold for n >= 1, got {n}")
    if metric is MetricId.TREATMENT_EQUALITY:
        if n2 is None or n2 < 1:
            raise ValueError("Treatment Equality needs both group sizes >= 1")
        return math.comb(n + 2, 2) + math.comb(n2 + 2, 2) - 1
    if metric is MetricId.PT:
        return pt_hole_bounds(n)
    if metric.family is Family.BINOMIAL:
        return 0
    if metric in (MetricId.MARGINAL_BENEFIT, MetricId.OFI):
        return 0
    if metric is MetricId.F1_SIMPLIFIED:
        return 1
    if metric.family is Family.JRM:
        return n + 1
    if metric is MetricId.MCC:
        return 4 * n
    if metric is MetricId.F1_ORIGINAL:
        return math.comb(n + 2, 2)
    raise AssertionError(f"unhandled metric {metric}")

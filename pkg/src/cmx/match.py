"""MATCH test: cumulative probability of an observed metric score under
a reference multinomial model.

Covered metrics: the six binomial-family metrics, marginal benefit, and
the eight joint-ratio metrics.  Each has an exact summation path and an
approximation (normal for binomial/marginal benefit, beta for JRMs).
All tail sums run in log space so large n cannot underflow.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import CellProbabilities, ConfusionMatrix
from .metrics import BINOMIAL_CELLS, JRM_CELLS, Family, MetricId, evaluate

# upward nudge before flooring so observed scores that are exact ratios
# include the boundary term of the "<=" CDF
FLOOR_NUDGE = 1e-9

NOTE_EXACT = "exact finite summation of the discrete CDF"
NOTE_NORMAL = "central limit approximation; Berry-Esseen error O(n^-1/2)"
NOTE_BETA = "beta posterior approximation with pseudo-counts; error shrinks with k"
NOTE_STEP = "degenerate distribution (zero variance); exact step CDF"


class ApplicabilityError(ValueError):
    """The requested approximation's applicability rule does not hold."""


@dataclass(frozen=True)
class MatchQuery:
    """One MATCH evaluation: metric, target-group size, observation, reference.

    The observation is either a bare score or a confusion matrix from
    which the score is computed.  The beta path needs the matrix since
    it uses the two cell counts separately.
    """

    metric: MetricId
    n: int
    reference: CellProbabilities
    score: float | None = None
    cm: ConfusionMatrix | None = None

    def __post_init__(self):
        if self.metric not in MATCH_METRICS:
            raise ValueError(
                f"MATCH covers binomial metrics, marginal benefit, and JRMs; "
                f"got {self.metric.name}"
            )
        if self.n < 1 or self.n != int(self.n):
            raise ValueError(f"n must be a positive integer, got {self.n}")
        if (self.score is None) == (self.cm is None):
            raise ValueError("provide exactly one of score or cm")

    @property
    def observed_score(self) -> float:
        if self.score is not None:
            return self.score
        result = evaluate(self.metric, self.cm)
        if not result.defined:
            raise ValueError(f"observed matrix has no defined score: {result.reason}")
        return result.score


@dataclass(frozen=True)
class MatchResult:
    """Cumulative probability P(S <= S_obs) plus how it was computed.

    For JRM exact queries p_leq is renormalized over the defined
    outcomes and p_leq_raw keeps the unnormalized sum.  p_two is a
    two-sided convenience value, filled in by the exact paths.
    """

    p_leq: float
    method: str
    error_note: str
    p_leq_raw: float | None = None
    p_two: float | None = None


MATCH_METRICS = frozenset(
    m for m in MetricId
    if m.family in (Family.BINOMIAL, Family.JRM) or m is MetricId.MARGINAL_BENEFIT
)


def _phi(z: float) -> float:
    """Standard normal CDF."""
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


def _clip01(x: float) -> float:
    return min(1.0, max(0.0, x))


def _two_sided(p_leq: float, p_eq: float) -> float:
    return _clip01(2.0 * min(p_leq, 1.0 - p_leq + p_eq))


def _log_binom_pmf(k: int, n: int, p: float) -> float:
    if p == 0.0:
        return 0.0 if k == 0 else -math.inf
    if p == 1.0:
        return 0.0 if k == n else -math.inf
    return (
        math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)
        + k * math.log(p) + (n - k) * math.log1p(-p)
    )


def _logsumexp(terms) -> float:
    arr = np.asarray(list(terms), dtype=np.float64)
    if arr.size == 0 or np.all(np.isinf(arr) & (arr < 0)):
        return -math.inf
    m = arr.max()
    return float(m + np.log(np.exp(arr - m).sum()))


def _binomial_reference_p(query: MatchQuery) -> float:
    i, j = BINOMIAL_CELLS[query.metric]
    probs = query.reference.as_tuple()
    return probs[i] + probs[j]


def binomial_cdf_exact(query: MatchQuery) -> MatchResult:
    """Exact binomial CDF for a binomial-family metric score."""
    if query.metric.family is not Family.BINOMIAL:
        raise ValueError(f"{query.metric.name} is not a binomial-family metric")
    s = query.observed_score
    if not -FLOOR_NUDGE <= s <= 1 + FLOOR_NUDGE:
        raise ValueError(f"binomial metric score must be in [0,1], got {s}")
    n = query.n
    p = _binomial_reference_p(query)
    k = min(n, math.floor(s * n + FLOOR_NUDGE))
    p_leq = _clip01(math.exp(_logsumexp(_log_binom_pmf(f, n, p) for f in range(k + 1))))
    # P(S = S_obs) is zero unless the observed score is an achievable ratio
    p_eq = math.exp(_log_binom_pmf(k, n, p)) if abs(s * n - k) <= FLOOR_NUDGE else 0.0
    return MatchResult(p_leq, "exact", NOTE_EXACT, p_two=_two_sided(p_leq, p_eq))


def binomial_cdf_normal(query: MatchQuery, force: bool = False) -> MatchResult:
    """Normal approximation with continuity correction (+0.5).

    Applicability rule: np >= 5 and nq >= 5; pass force=True to bypass.
    """
    if query.metric.family is not Family.BINOMIAL:
        raise ValueError(f"{query.metric.name} is not a binomial-family metric")
    s = query.observed_score
    if not -FLOOR_NUDGE <= s <= 1 + FLOOR_NUDGE:
        raise ValueError(f"binomial metric score must be in [0,1], got {s}")
    n = query.n
    p = _binomial_reference_p(query)
    q = 1.0 - p
    if not force and (n * p < 5 or n * q < 5):
        raise ApplicabilityError(
            f"normal approximation needs np >= 5 and nq >= 5 (np={n * p:.3g}, "
            f"nq={n * q:.3g}); use the exact path or force=True"
        )
    if p in (0.0, 1.0):
        k = min(n, math.floor(s * n + FLOOR_NUDGE))
        target = 0 if p == 0.0 else n
        return MatchResult(1.0 if k >= target else 0.0, "normal-approx", NOTE_STEP)
    k = min(n, math.floor(s * n + FLOOR_NUDGE))
    z = (k + 0.5 - n * p) / math.sqrt(n * p * q)
    return MatchResult(_clip01(_phi(z)), "normal-approx", NOTE_NORMAL)


def _mb_log_pmf(k: int, n: int, p_plus: float, p_minus: float, p_zero: float) -> float:
    """Log PMF of the count difference S = FP - FN at integer k."""
    lo = max(0, -k)
    hi = (n - k) // 2
    terms = []
    for m in range(lo, hi + 1):
        counts = (k + m, m, n - k - 2 * m)
        probs = (p_plus, p_minus, p_zero)
        log_term = math.lgamma(n + 1)
        dead = False
        for c, pr in zip(counts, probs):
            log_term -= math.lgamma(c + 1)
            if c > 0:
                if pr == 0.0:
                    dead = True
                    break
                log_term += c * math.log(pr)
        if not dead:
            terms.append(log_term)
    return _logsumexp(terms)


def marginal_benefit_cdf_exact(query: MatchQuery) -> MatchResult:
    """Exact CDF of marginal benefit by summing its count-difference PMF."""
    if query.metric is not MetricId.MARGINAL_BENEFIT:
        raise ValueError("query metric must be MARGINAL_BENEFIT")
    b = query.observed_score
    if not -1 - FLOOR_NUDGE <= b <= 1 + FLOOR_NUDGE:
        raise ValueError(f"marginal benefit score must be in [-1,1], got {b}")
    n = query.n
    ref = query.reference
    p_plus, p_minus = ref.p_fp, ref.p_fn
    p_zero = ref.p_tp + ref.p_tn
    kmax = min(n, math.floor(n * b + FLOOR_NUDGE))
    logs = [_mb_log_pmf(k, n, p_plus, p_minus, p_zero) for k in range(-n, kmax + 1)]
    p_leq = _clip01(math.exp(_logsumexp(logs)))
    p_eq = math.exp(logs[-1]) if logs and abs(n * b - kmax) <= FLOOR_NUDGE else 0.0
    return MatchResult(p_leq, "exact", NOTE_EXACT, p_two=_two_sided(p_leq, p_eq))


def marginal_benefit_cdf_normal(query: MatchQuery) -> MatchResult:
    """Normal approximation to the marginal-benefit CDF.

    Standardizes the sum S = FP - FN by its moments: mean n*mu and
    standard deviation sqrt(n)*sigma with mu = p_+ - p_- and
    sigma^2 = (p_+ + p_-) - (p_+ - p_-)^2.  A zero variance means the
    score is deterministic, so the step CDF is returned instead.
    """
    if query.metric is not MetricId.MARGINAL_BENEFIT:
        raise ValueError("query metric must be MARGINAL_BENEFIT")
    b = query.observed_score
    if not -1 - FLOOR_NUDGE <= b <= 1 + FLOOR_NUDGE:
        raise ValueError(f"marginal benefit score must be in [-1,1], got {b}")
    n = query.n
    ref = query.reference
    p_plus, p_minus = ref.p_fp, ref.p_fn
    mu = p_plus - p_minus
    var = (p_plus + p_minus) - mu * mu
    if var <= 0.0:
        return MatchResult(1.0 if b >= mu - FLOOR_NUDGE else 0.0, "normal-approx", NOTE_STEP)
    if query.cm is not None:
        k_diff = query.cm.fp - query.cm.fn
    else:
        k_diff = round(n * b)
    z = (k_diff - n * mu) / (math.sqrt(n) * math.sqrt(var))
    return MatchResult(_clip01(_phi(z)), "normal-approx", NOTE_NORMAL)


def _jrm_reference(query: MatchQuery) -> tuple[float, float]:
    i, j = JRM_CELLS[query.metric]
    probs = query.reference.as_tuple()
    return probs[i], probs[j]


def jrm_cdf_exact(query: MatchQuery) -> MatchResult:
    """Exact JRM CDF: outer binomial over k = c_i + c_j, inner binomial
    over c_i given k.  O(n^2).

    The k=0 outcome leaves the metric undefined, so its mass is not part
    of the summation.  p_leq is the probability renormalized over
    defined outcomes (the usable MATCH percentile); p_leq_raw keeps the
    unnormalized value.
    """
    if query.metric.family is not Family.JRM:
        raise ValueError(f"{query.metric.name} is not a JRM")
    s = query.observed_score
    if not -FLOOR_NUDGE <= s <= 1 + FLOOR_NUDGE:
        raise ValueError(f"JRM score must be in [0,1], got {s}")
    n = query.n
    p_i, p_j = _jrm_reference(query)
    p = p_i + p_j
    if p == 0.0:
        raise ValueError("metric is always undefined under this reference (p_i + p_j = 0)")
    theta = p_i / p

    log_terms_leq = []
    log_terms_lt = []  # strict inequality, for the point mass at S_obs
    for k in range(1, n + 1):
        log_outer = _log_binom_pmf(k, n, p)
        if log_outer == -math.inf:
            continue
        ki_leq = min(k, math.floor(s * k + FLOOR_NUDGE))
        ki_lt = min(k, math.ceil(s * k - FLOOR_NUDGE) - 1)
        inner_logs = [_log_binom_pmf(ki, k, theta) for ki in range(0, ki_leq + 1)]
        if ki_leq >= 0:
            log_terms_leq.append(log_outer + _logsumexp(inner_logs))
        if ki_lt >= 0:
            log_terms_lt.append(log_outer + _logsumexp(inner_logs[: ki_lt + 1]))

    raw_leq = math.exp(_logsumexp(log_terms_leq))
    raw_lt = math.exp(_logsumexp(log_terms_lt))
    # mass on defined outcomes: 1 - P(k = 0)
    defined_mass = -math.expm1(n * math.log1p(-p)) if p < 1.0 else 1.0
    p_leq = _clip01(raw_leq / defined_mass)
    p_eq = max(0.0, p_leq - _clip01(raw_lt / defined_mass))
    return MatchResult(
        p_leq,
        "exact",
        NOTE_EXACT,
        p_leq_raw=_clip01(raw_leq),
        p_two=_two_sided(p_leq, p_eq),
    )


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b) via Lentz continued fraction."""
    if a <= 0 or b <= 0:
        raise ValueError(f"shape parameters must be positive, got a={a}, b={b}")
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must be in [0,1], got {x}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    log_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(log_front)
    # the continued fraction converges fast for x < (a+1)/(a+b+2);
    # otherwise use the symmetry I_x(a,b) = 1 - I_{1-x}(b,a)
    if x < (a + 1.0) / (a + b + 2.0):
        return _clip01(front * _beta_cont_frac(a, b, x) / a)
    return _clip01(1.0 - front * _beta_cont_frac(b, a, 1.0 - x) / b)


def _beta_cont_frac(a: float, b: float, x: float, max_iter: int = 300, eps: float = 1e-15) -> float:
    """Continued fraction for the incomplete beta (modified Lentz)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            return h
    raise RuntimeError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def jrm_cdf_beta(query: MatchQuery, pseudo_counts: float = 1.0) -> MatchResult:
    """Beta approximation to the JRM CDF: I_s(k_i + lam, k_j + lam).

    Needs the observed confusion matrix since the two cell counts enter
    separately.  pseudo_counts=1 is the uniform-prior default.
    """
    if query.metric.family is not Family.JRM:
        raise ValueError(f"{query.metric.name} is not a JRM")
    if query.cm is None:
        raise ValueError("the beta path needs an observed confusion matrix")
    if pseudo_counts < 0:
        raise ValueError(f"pseudo_counts must be >= 0, got {pseudo_counts}")
    s = query.observed_score
    if not -FLOOR_NUDGE <= s <= 1 + FLOOR_NUDGE:
        raise ValueError(f"JRM score must be in [0,1], got {s}")
    i, j = JRM_CELLS[query.metric]
    cells = query.cm.cells
    a = cells[i] + pseudo_counts
    b = cells[j] + pseudo_counts
    p_leq = regularized_incomplete_beta(a, b, _clip01(s))
    return MatchResult(p_leq, "beta-approx", NOTE_BETA)


AUTO_EXACT_MAX_N = 500


def run_match(query: MatchQuery, method: str = "auto", force: bool = False) -> MatchResult:
    """Dispatch a MATCH query to the right computation path.

    method: exact | normal | beta | auto.  Auto uses the exact path for
    n <= 500 and the family's approximation beyond that.
    """
    family = query.metric.family
    if method == "auto":
        if query.n <= AUTO_EXACT_MAX_N:
            method = "exact"
        elif family is Family.JRM:
            method = "beta"
        else:
            method = "normal"
    if method == "exact":
        if family is Family.BINOMIAL:
            return binomial_cdf_exact(query)
        if family is Family.JRM:
            return jrm_cdf_exact(query)
        return marginal_benefit_cdf_exact(query)
    if method == "normal":
        if family is Family.BINOMIAL:
            return binomial_cdf_normal(query, force=force)
        if query.metric is MetricId.MARGINAL_BENEFIT:
            return marginal_benefit_cdf_normal(query)
        raise ValueError("the normal path covers binomial metrics and marginal benefit only")
    if method == "beta":
        if family is Family.JRM:
            return jrm_cdf_beta(query)
        raise ValueError("the beta path covers JRMs only")
    raise ValueError(f"unknown method {method!r}")

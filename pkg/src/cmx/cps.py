"""Cross-Prior Smoothing: shrink a small group's confusion matrix toward
a normalized reference prior, rescaled to the group's own total count.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

from .core import CellProbabilities, ConfusionMatrix

DEFAULT_LAMBDA = 10.0
RECOMMENDED_LAMBDAS = (5.0, 10.0, 20.0)
LAMBDA_WARN_THRESHOLD = 40.0
MIN_REFERENCE_TOTAL = 100.0


@dataclass(frozen=True)
class CpsConfig:
    """Smoothing strength and reference prior.

    The reference may be raw counts or probabilities; it is normalized
    to a simplex internally either way.
    """

    lam: float = DEFAULT_LAMBDA
    reference: ConfusionMatrix | CellProbabilities = CellProbabilities.uniform()

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError(f"lambda must be >= 0, got {self.lam}")
        if self.lam >= LAMBDA_WARN_THRESHOLD:
            warnings.warn(
                f"lambda={self.lam} is large; values around 5-20 tend to work better",
                stacklevel=3,
            )
        # validates the reference normalizes (raises on all-zero counts)
        self.reference_probabilities()

    def reference_probabilities(self) -> CellProbabilities:
        ref = self.reference
        if isinstance(ref, CellProbabilities):
            return ref
        if ref.n <= 0:
            raise ValueError("reference matrix must have positive total count")
        return ref.proportions()


def smooth(cm: ConfusionMatrix, config: CpsConfig) -> ConfusionMatrix:
    """Apply cross-prior smoothing to a group's confusion matrix.

    Each cell becomes (c + lam * ref_c) / (n + lam) * n, so the output
    is real-valued, keeps the group's total count, and moves each cell
    proportion toward the reference as lam grows.
    """
    n = cm.n
    if n <= 0:
        raise ValueError("cannot smooth an empty group (n = 0)")
    if config.lam == 0:
        return cm
    ref = config.reference_probabilities().as_tuple()
    alphas = [c + config.lam * r for c, r in zip(cm.cells, ref)]
    total = sum(alphas)  # equals n + lam
    return ConfusionMatrix(*(a / total * n for a in alphas))


def reference_from_totals(total: ConfusionMatrix, group: ConfusionMatrix) -> ConfusionMatrix:
    """Leave-one-group-out reference: cellwise total minus the group.

    Warns when the remaining reference has fewer than 100 samples, where
    the reference's own small-sample bias is no longer negligible.
    """
    cells = [t - g for t, g in zip(total.cells, group.cells)]
    if any(c < 0 for c in cells):
        raise ValueError("group counts exceed the totals in at least one cell")
    ref = ConfusionMatrix(*cells)
    if ref.n < MIN_REFERENCE_TOTAL:
        warnings.warn(
            f"reference group has n={ref.n:g} < {MIN_REFERENCE_TOTAL:g}; "
            "its own sampling noise may dominate the prior",
            stacklevel=2,
        )
    return ref


def theoretical_bias(p_c: float, p_ref_c: float, n: float, lam: float) -> float:
    """Bias of the smoothed cell proportion: lam/(n+lam) * (p'_c - p_c)."""
    return lam / (n + lam) * (p_ref_c - p_c)


def theoretical_variance(p_c: float, n: float, lam: float) -> float:
    """Variance of the smoothed cell proportion: n*p(1-p)/(n+lam)^2."""
    return n * p_c * (1.0 - p_c) / (n + lam) ** 2


def prior_comparison(
    hidden: CellProbabilities,
    priors: list[tuple[str, CellProbabilities | None]],
) -> dict[str, tuple[float, float, float, float]]:
    """Per-prior, per-cell absolute differences from a hidden group.

    A None prior means "no prior assumption" (an all-zero estimate), so
    its differences are the hidden proportions themselves.
    """
    table = {}
    hid = hidden.as_tuple()
    for name, prior in priors:
        est = (0.0, 0.0, 0.0, 0.0) if prior is None else prior.as_tuple()
        table[name] = tuple(abs(e - h) for e, h in zip(est, hid))
    return table

"""Confusion matrices, their multinomial probability model, and the
combinatorial enumeration of all matrices with a given total count.

Cell order everywhere is (tp, fn, fp, tn), i.e. row-major over the
2x2 layout [[TP, FN], [FP, TN]].
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np
from scipy.special import gammaln

INTEGRALITY_TOL = 1e-9
SIMPLEX_TOL = 1e-12

CELL_NAMES = ("tp", "fn", "fp", "tn")


@dataclass(frozen=True)
class ConfusionMatrix:
    """A 2x2 confusion matrix with non-negative cell magnitudes.

    Cells are stored as doubles so one type serves both observed integer
    counts and real-valued smoothed matrices.  Enumeration and the exact
    distributions require `is_integral` to hold.
    """

    tp: float
    fn: float
    fp: float
    tn: float

    def __post_init__(self):
        for name, c in zip(CELL_NAMES, self.cells):
            if not math.isfinite(c) or c < 0:
                raise ValueError(f"cell {name} must be finite and >= 0, got {c}")

    @property
    def cells(self) -> tuple[float, float, float, float]:
        return (self.tp, self.fn, self.fp, self.tn)

    @property
    def n(self) -> float:
        return self.tp + self.fn + self.fp + self.tn

    @property
    def is_integral(self) -> bool:
        return all(abs(c - round(c)) < INTEGRALITY_TOL for c in self.cells)

    def int_cells(self) -> tuple[int, int, int, int]:
        if not self.is_integral:
            raise ValueError(f"matrix {self.cells} is not integral")
        return tuple(round(c) for c in self.cells)

    def proportions(self) -> "CellProbabilities":
        """Normalize cells to a simplex vector; requires n > 0."""
        n = self.n
        if n <= 0:
            raise ValueError("cannot normalize an all-zero matrix")
        return CellProbabilities(self.tp / n, self.fn / n, self.fp / n, self.tn / n)

    def to_dict(self) -> dict:
        return {name: c for name, c in zip(CELL_NAMES, self.cells)}

    def to_csv_row(self) -> str:
        return ",".join(format_number(c) for c in self.cells)

    @classmethod
    def from_dict(cls, d: dict) -> "ConfusionMatrix":
        try:
            return cls(*(float(d[name]) for name in CELL_NAMES))
        except KeyError as e:
            raise ValueError(f"missing cell field {e.args[0]!r}") from None

    @classmethod
    def from_csv_row(cls, row: str) -> "ConfusionMatrix":
        parts = row.split(",")
        if len(parts) != 4:
            raise ValueError(f"expected 4 comma-separated cells, got {len(parts)}")
        return cls(*(float(p) for p in parts))


@dataclass(frozen=True)
class CellProbabilities:
    """Multinomial parameters (p_tp, p_fn, p_fp, p_tn) on the simplex."""

    p_tp: float
    p_fn: float
    p_fp: float
    p_tn: float

    def __post_init__(self):
        for name, p in zip(CELL_NAMES, self.as_tuple()):
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"probability for {name} out of [0,1]: {p}")
        s = sum(self.as_tuple())
        if abs(s - 1.0) > SIMPLEX_TOL:
            raise ValueError(f"probabilities must sum to 1, got {s!r}")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.p_tp, self.p_fn, self.p_fp, self.p_tn)

    @classmethod
    def normalized(cls, tp: float, fn: float, fp: float, tn: float) -> "CellProbabilities":
        """Build a simplex vector from non-negative weights."""
        s = tp + fn + fp + tn
        if s <= 0:
            raise ValueError("weights must have positive sum")
        # renormalize exactly so the simplex invariant holds despite rounding
        vals = [tp / s, fn / s, fp / s, tn / s]
        vals[3] = 1.0 - vals[0] - vals[1] - vals[2]
        return cls(*vals)

    @classmethod
    def uniform(cls) -> "CellProbabilities":
        return cls(0.25, 0.25, 0.25, 0.25)


def enumerate_matrices(n: int) -> Iterator[ConfusionMatrix]:
    """Yield every integral confusion matrix with cell sum n exactly once.

    Lexicographic order: tp outermost, then fn, then fp; tn is forced.
    The sequence has length space_cardinality(n); n=0 yields the single
    all-zero matrix.
    """
    if n < 0 or n != int(n):
        raise ValueError(f"n must be a non-negative integer, got {n}")
    n = int(n)
    for tp in range(n + 1):
        for fn in range(n - tp + 1):
            for fp in range(n - tp - fn + 1):
                yield ConfusionMatrix(tp, fn, fp, n - tp - fn - fp)


def enumerate_matrices_array(n: int) -> np.ndarray:
    """All of M(n) as an (N, 4) integer array in enumeration order.

    Materializes the whole space; intended for vectorized sweeps where
    the Theta(n^3) memory cost is acceptable.
    """
    if n < 0 or n != int(n):
        raise ValueError(f"n must be a non-negative integer, got {n}")
    n = int(n)
    blocks = []
    for tp in range(n + 1):
        for fn in range(n - tp + 1):
            m = n - tp - fn
            fp = np.arange(m + 1, dtype=np.int64)
            block = np.empty((m + 1, 4), dtype=np.int64)
            block[:, 0] = tp
            block[:, 1] = fn
            block[:, 2] = fp
            block[:, 3] = m - fp
            blocks.append(block)
    return np.concatenate(blocks, axis=0)


def space_cardinality(n: int) -> int:
    """|M(n)| = C(n+3, 3) = (n+1)(n+2)(n+3)/6, computed exactly."""
    if n < 0 or n != int(n):
        raise ValueError(f"n must be a non-negative integer, got {n}")
    n = int(n)
    return (n + 1) * (n + 2) * (n + 3) // 6


def cell_value_count(x: int, n: int) -> int:
    """Number of matrices in M(n) whose designated cell equals x.

    Equals C(n-x+2, 2): the other three cells partition n-x.
    """
    if n < 0 or n != int(n):
        raise ValueError(f"n must be a non-negative integer, got {n}")
    if x < 0 or x > n or x != int(x):
        raise ValueError(f"x must be an integer in [0, {n}], got {x}")
    return math.comb(int(n) - int(x) + 2, 2)


def matrix_probability(cm: ConfusionMatrix, p: CellProbabilities) -> float:
    """Multinomial PMF of an integral matrix under cell probabilities p.

    Computed in log space via log-gamma so large n cannot overflow;
    0**0 := 1 so zero-probability cells with zero counts contribute 1,
    and any positive count on a zero-probability cell gives 0.
    """
    counts = cm.int_cells()
    n = sum(counts)
    logp = math.lgamma(n + 1)
    for k, prob in zip(counts, p.as_tuple()):
        if k == 0:
            continue
        if prob == 0.0:
            return 0.0
        logp += k * math.log(prob) - math.lgamma(k + 1)
    return math.exp(logp)


def log_pmf_array(cells: np.ndarray, p: CellProbabilities) -> np.ndarray:
    """Vectorized log multinomial PMF over an (N, 4) array of counts.

    Rows with positive counts on zero-probability cells get -inf.
    """
    cells = np.asarray(cells, dtype=np.float64)
    n = cells.sum(axis=1)
    logp = gammaln(n + 1.0) - gammaln(cells + 1.0).sum(axis=1)
    probs = np.asarray(p.as_tuple())
    for j in range(4):
        pj = probs[j]
        kj = cells[:, j]
        if pj == 0.0:
            logp = np.where(kj > 0, -np.inf, logp)
        else:
            logp += kj * math.log(pj)
    return logp


def format_number(x: float) -> str:
    """Render a float with 10 significant digits; integers stay bare."""
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return format(x, ".10g")

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cmx.core import enumerate_matrices
from cmx.metrics import (
    Family,
    MetricId,
    count_holes_closed_form,
    count_holes_enumerated,
    count_holes_enumerated_pair,
    evaluate,
    evaluate_pair,
    pt_hole_bounds,
)

CLOSED_FORM_METRICS = [
    m for m in MetricId if m.arity == 1 and m is not MetricId.PT
]


def slow_count(metric, n):
    """Oracle: per-matrix scalar evaluation over the full enumeration."""
    return sum(1 for cm in enumerate_matrices(n) if not evaluate(metric, cm).defined)


class TestClosedForms:
    @pytest.mark.parametrize("metric", CLOSED_FORM_METRICS, ids=lambda m: m.abbrev)
    @pytest.mark.parametrize("n", [1, 2, 3, 7, 12])
    def test_enumerated_equals_closed_form(self, metric, n):
        assert count_holes_enumerated(metric, n) == count_holes_closed_form(metric, n)

    @pytest.mark.parametrize("n", [1, 4, 9])
    def test_vectorized_count_matches_scalar_oracle(self, n):
        for metric in CLOSED_FORM_METRICS + [MetricId.PT]:
            assert count_holes_enumerated(metric, n) == slow_count(metric, n)

    def test_known_values(self):
        assert count_holes_enumerated(MetricId.ACC, 10) == 0
        assert count_holes_enumerated(MetricId.TPR, 10) == 11
        assert count_holes_enumerated(MetricId.MCC, 10) == 40
        assert count_holes_enumerated(MetricId.F1_SIMPLIFIED, 10) == 1
        assert count_holes_enumerated(MetricId.F1_ORIGINAL, 10) == math.comb(12, 2)
        assert count_holes_enumerated(MetricId.MARGINAL_BENEFIT, 10) == 0

    @given(n=st.integers(1, 40))
    @settings(max_examples=40, deadline=None)
    def test_closed_forms_hold_across_range(self, n):
        for metric in CLOSED_FORM_METRICS:
            assert count_holes_enumerated(metric, n) == count_holes_closed_form(metric, n)

    def test_n0_every_metric_one_hole(self):
        for metric in CLOSED_FORM_METRICS + [MetricId.PT]:
            assert count_holes_enumerated(metric, 0) == 1

    def test_budget_cap(self):
        with pytest.raises(ValueError, match="budget"):
            count_holes_enumerated(MetricId.TPR, 61)
        assert count_holes_enumerated(MetricId.TPR, 61, cap=61) == 62

    def test_closed_form_domain(self):
        with pytest.raises(ValueError):
            count_holes_closed_form(MetricId.TPR, 0)


class TestTwoGroup:
    def test_ofi_never_undefined(self):
        assert count_holes_enumerated_pair(MetricId.OFI, 4, 6) == 0
        for cm1 in enumerate_matrices(3):
            for cm2 in enumerate_matrices(2):
                assert evaluate_pair(MetricId.OFI, cm1, cm2).defined

    def test_te_per_group_convention(self):
        # oracle: per-group hole configurations found by pairing against a
        # probe group whose own FP is positive, combined as h1 + h2 - 1
        probe2 = next(cm for cm in enumerate_matrices(6) if cm.fp > 0)
        probe1 = next(cm for cm in enumerate_matrices(4) if cm.fp > 0)
        h1 = sum(
            1
            for cm in enumerate_matrices(4)
            if not evaluate_pair(MetricId.TREATMENT_EQUALITY, cm, probe2).defined
        )
        h2 = sum(
            1
            for cm in enumerate_matrices(6)
            if not evaluate_pair(MetricId.TREATMENT_EQUALITY, probe1, cm).defined
        )
        assert h1 == math.comb(6, 2)
        assert h2 == math.comb(8, 2)
        assert count_holes_enumerated_pair(MetricId.TREATMENT_EQUALITY, 4, 6) == h1 + h2 - 1
        assert count_holes_closed_form(MetricId.TREATMENT_EQUALITY, 4, 6) == 42

    @pytest.mark.parametrize("n1,n2", [(1, 1), (2, 5), (8, 3), (15, 15)])
    def test_te_matches_closed_form(self, n1, n2):
        assert count_holes_enumerated_pair(
            MetricId.TREATMENT_EQUALITY, n1, n2
        ) == count_holes_closed_form(MetricId.TREATMENT_EQUALITY, n1, n2)

    def test_domain_checks(self):
        with pytest.raises(ValueError):
            count_holes_enumerated_pair(MetricId.TREATMENT_EQUALITY, 0, 5)
        with pytest.raises(ValueError):
            count_holes_enumerated_pair(MetricId.ACC, 3, 3)
        with pytest.raises(ValueError):
            count_holes_closed_form(MetricId.TREATMENT_EQUALITY, 5)


class TestPrevalenceThreshold:
    def test_bounds_domain(self):
        with pytest.raises(ValueError):
            pt_hole_bounds(2)
        lower, upper = pt_hole_bounds(3)
        assert lower == 8
        assert upper >= 1

    @pytest.mark.parametrize("n", range(3, 41))
    def test_lower_bound_holds(self, n):
        lower, _ = pt_hole_bounds(n)
        assert count_holes_enumerated(MetricId.PT, n) >= lower

    def test_pt_holes_exceed_jrm_holes(self):
        # the TPR and FPR hole sets are disjoint subsets of the PT holes
        for n in (3, 10, 25):
            assert count_holes_enumerated(MetricId.PT, n) >= 2 * (n + 1)

    def test_closed_form_returns_bounds(self):
        assert count_holes_closed_form(MetricId.PT, 10) == pt_hole_bounds(10)

    def test_hole_decomposition(self):
        # PT holes = TPR holes + FPR holes + defined-rate ties (disjoint)
        n = 8
        ties = sum(
            1
            for cm in enumerate_matrices(n)
            if cm.tp + cm.fn > 0
            and cm.fp + cm.tn > 0
            and cm.tp * cm.tn == cm.fp * cm.fn
        )
        assert count_holes_enumerated(MetricId.PT, n) == 2 * (n + 1) + ties

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cmx.core import ConfusionMatrix, enumerate_matrices, enumerate_matrices_array
from cmx.metrics import (
    BINOMIAL_CELLS,
    JRM_CELLS,
    Family,
    MetricId,
    MetricResult,
    evaluate,
    evaluate_batch,
    evaluate_pair,
)

ONE_GROUP = [m for m in MetricId if m.arity == 1]

matrices = st.builds(
    ConfusionMatrix,
    st.integers(0, 30),
    st.integers(0, 30),
    st.integers(0, 30),
    st.integers(0, 30),
)

nonempty_matrices = matrices.filter(lambda cm: cm.n > 0)


def score_or_none(result: MetricResult):
    return result.score if result.defined else None


class TestRoster:
    def test_counts_by_family(self):
        assert len(list(MetricId)) == 21
        assert sum(1 for m in MetricId if m.family is Family.BINOMIAL) == 6
        assert sum(1 for m in MetricId if m.family is Family.JRM) == 8
        assert sum(1 for m in MetricId if m.family is Family.OTHER) == 7
        assert [m for m in MetricId if m.arity == 2] == [
            MetricId.OFI,
            MetricId.TREATMENT_EQUALITY,
        ]

    def test_name_lookup(self):
        assert MetricId.from_name("tpr") is MetricId.TPR
        assert MetricId.from_name(" MCC ") is MetricId.MCC
        assert MetricId.from_name("f1") is MetricId.F1_SIMPLIFIED
        with pytest.raises(ValueError, match="unknown metric"):
            MetricId.from_name("auc")

    def test_abbrevs_unique(self):
        abbrevs = [m.abbrev for m in MetricId]
        assert len(set(abbrevs)) == len(abbrevs)


class TestHandValues:
    CM = ConfusionMatrix(6, 2, 1, 11)  # n=20

    def test_binomial_values(self):
        assert evaluate(MetricId.ACC, self.CM).score == pytest.approx(17 / 20)
        assert evaluate(MetricId.PREV, self.CM).score == pytest.approx(8 / 20)
        assert evaluate(MetricId.PPR, self.CM).score == pytest.approx(7 / 20)
        assert evaluate(MetricId.INACC, self.CM).score == pytest.approx(3 / 20)
        assert evaluate(MetricId.NPREV, self.CM).score == pytest.approx(12 / 20)
        assert evaluate(MetricId.PNR, self.CM).score == pytest.approx(13 / 20)

    def test_jrm_values(self):
        assert evaluate(MetricId.TPR, self.CM).score == pytest.approx(6 / 8)
        assert evaluate(MetricId.FPR, self.CM).score == pytest.approx(1 / 12)
        assert evaluate(MetricId.TNR, self.CM).score == pytest.approx(11 / 12)
        assert evaluate(MetricId.FNR, self.CM).score == pytest.approx(2 / 8)
        assert evaluate(MetricId.PPV, self.CM).score == pytest.approx(6 / 7)
        assert evaluate(MetricId.NPV, self.CM).score == pytest.approx(11 / 13)
        assert evaluate(MetricId.FDR, self.CM).score == pytest.approx(1 / 7)
        assert evaluate(MetricId.FOR, self.CM).score == pytest.approx(2 / 13)

    def test_f1_values(self):
        expected = 2 * 6 / (2 * 6 + 1 + 2)
        assert evaluate(MetricId.F1_ORIGINAL, self.CM).score == pytest.approx(expected)
        assert evaluate(MetricId.F1_SIMPLIFIED, self.CM).score == pytest.approx(expected)

    def test_mcc_value(self):
        num = 6 * 11 - 1 * 2
        den = math.sqrt(7 * 8 * 12 * 13)
        assert evaluate(MetricId.MCC, self.CM).score == pytest.approx(num / den)

    def test_mcc_extremes(self):
        assert evaluate(MetricId.MCC, ConfusionMatrix(5, 0, 0, 5)).score == pytest.approx(1.0)
        assert evaluate(MetricId.MCC, ConfusionMatrix(0, 5, 5, 0)).score == pytest.approx(-1.0)

    def test_pt_value(self):
        tpr, fpr = 6 / 8, 1 / 12
        expected = (math.sqrt(tpr * fpr) - fpr) / (tpr - fpr)
        assert evaluate(MetricId.PT, self.CM).score == pytest.approx(expected)

    def test_pt_perfect_classifier(self):
        # TPR=1, FPR=0 gives threshold 0
        assert evaluate(MetricId.PT, ConfusionMatrix(5, 0, 0, 5)).score == pytest.approx(0.0)

    def test_marginal_benefit(self):
        assert evaluate(MetricId.MARGINAL_BENEFIT, self.CM).score == pytest.approx(-1 / 20)
        assert evaluate(
            MetricId.MARGINAL_BENEFIT, ConfusionMatrix(0, 0, 3, 1)
        ).score == pytest.approx(0.75)

    def test_ofi(self):
        cm1 = ConfusionMatrix(0, 0, 2, 0)  # benefit +1
        cm2 = ConfusionMatrix(0, 2, 0, 0)  # benefit -1
        assert evaluate_pair(MetricId.OFI, cm1, cm2).score == pytest.approx(2.0)

    def test_treatment_equality(self):
        cm1 = ConfusionMatrix(1, 4, 2, 3)  # fn/fp = 2
        cm2 = ConfusionMatrix(0, 3, 6, 1)  # fn/fp = 0.5
        assert evaluate_pair(MetricId.TREATMENT_EQUALITY, cm1, cm2).score == pytest.approx(1.5)


class TestUndefinedCases:
    def test_every_metric_undefined_at_n0(self):
        zero = ConfusionMatrix(0, 0, 0, 0)
        for m in ONE_GROUP:
            result = evaluate(m, zero)
            assert not result.defined, m
            assert result.reason == "n=0"
        for m in (MetricId.OFI, MetricId.TREATMENT_EQUALITY):
            assert not evaluate_pair(m, zero, ConfusionMatrix(1, 1, 1, 1)).defined

    def test_jrm_holes(self):
        cm = ConfusionMatrix(0, 0, 3, 2)  # no actual positives
        r = evaluate(MetricId.TPR, cm)
        assert not r.defined and r.reason == "TP+FN=0"
        assert not evaluate(MetricId.FNR, cm).defined
        assert evaluate(MetricId.FPR, cm).defined

    def test_f1_holes(self):
        no_tp = ConfusionMatrix(0, 1, 1, 3)
        assert not evaluate(MetricId.F1_ORIGINAL, no_tp).defined
        # simplified form stays defined when only TP is zero
        assert evaluate(MetricId.F1_SIMPLIFIED, no_tp).score == pytest.approx(0.0)
        all_tn = ConfusionMatrix(0, 0, 0, 5)
        assert not evaluate(MetricId.F1_SIMPLIFIED, all_tn).defined

    def test_mcc_hole_reasons(self):
        r = evaluate(MetricId.MCC, ConfusionMatrix(0, 3, 0, 2))
        assert not r.defined and r.reason == "TP+FP=0"

    def test_pt_equal_rates_hole(self):
        r = evaluate(MetricId.PT, ConfusionMatrix(1, 1, 1, 1))  # TPR = FPR = 0.5
        assert not r.defined and r.reason == "TPR-FPR=0"
        # useless classifier at unequal group sizes: TPR = FPR = 0.5
        assert not evaluate(MetricId.PT, ConfusionMatrix(2, 2, 3, 3)).defined

    def test_te_hole(self):
        ok = ConfusionMatrix(1, 1, 1, 1)
        bad = ConfusionMatrix(1, 1, 0, 1)
        r = evaluate_pair(MetricId.TREATMENT_EQUALITY, ok, bad)
        assert not r.defined and r.reason == "FP_2=0"
        assert evaluate_pair(MetricId.TREATMENT_EQUALITY, bad, ok).reason == "FP_1=0"

    def test_undefined_never_raises_or_nans(self):
        for cm in enumerate_matrices(4):
            for m in ONE_GROUP:
                r = evaluate(m, cm)
                if r.defined:
                    assert math.isfinite(r.score)
                else:
                    assert r.reason

    def test_real_valued_tolerance(self):
        # a denominator below 1e-12 on a non-integral matrix is a hole
        cm = ConfusionMatrix(1e-13, 1e-13, 1.5, 2.5)
        assert not evaluate(MetricId.TPR, cm).defined
        # above the tolerance it is defined
        cm = ConfusionMatrix(1e-11, 1e-11, 1.5, 2.5)
        assert evaluate(MetricId.TPR, cm).defined


class TestEps:
    def test_eps_fills_holes(self):
        cm = ConfusionMatrix(0, 0, 3, 2)
        assert not evaluate(MetricId.TPR, cm).defined
        r = evaluate(MetricId.TPR, cm, eps=1e-10)
        assert r.defined and r.score == pytest.approx(0.5)

    def test_add_one_prior(self):
        cm = ConfusionMatrix(3, 1, 0, 0)
        r = evaluate(MetricId.PREV, cm, eps=1.0)
        assert r.score == pytest.approx((3 + 1 + 1 + 1) / 8)

    def test_eps_zero_matches_plain(self):
        cm = ConfusionMatrix(2, 3, 4, 5)
        for m in ONE_GROUP:
            assert evaluate(m, cm, eps=0.0) == evaluate(m, cm)

    def test_negative_eps_rejected(self):
        with pytest.raises(ValueError):
            evaluate(MetricId.ACC, ConfusionMatrix(1, 1, 1, 1), eps=-0.1)


class TestIdentities:
    @given(cm=nonempty_matrices)
    @settings(max_examples=300)
    def test_binomial_complements(self, cm):
        for a, b in [
            (MetricId.ACC, MetricId.INACC),
            (MetricId.PREV, MetricId.NPREV),
            (MetricId.PPR, MetricId.PNR),
        ]:
            assert evaluate(a, cm).score + evaluate(b, cm).score == pytest.approx(1.0)

    @given(cm=nonempty_matrices)
    @settings(max_examples=300)
    def test_jrm_complements(self, cm):
        for a, b in [
            (MetricId.TPR, MetricId.FNR),
            (MetricId.TNR, MetricId.FPR),
            (MetricId.PPV, MetricId.FDR),
            (MetricId.NPV, MetricId.FOR),
        ]:
            ra, rb = evaluate(a, cm), evaluate(b, cm)
            assert ra.defined == rb.defined
            if ra.defined:
                assert ra.score + rb.score == pytest.approx(1.0)

    @given(cm=nonempty_matrices)
    @settings(max_examples=300)
    def test_f1_forms_agree_when_tp_positive(self, cm):
        original = evaluate(MetricId.F1_ORIGINAL, cm)
        simplified = evaluate(MetricId.F1_SIMPLIFIED, cm)
        if cm.tp > 0:
            assert original.defined and simplified.defined
            assert original.score == pytest.approx(simplified.score, rel=1e-12)
        else:
            assert not original.defined

    @given(cm=nonempty_matrices, k=st.integers(2, 5))
    @settings(max_examples=300)
    def test_scale_invariance(self, cm, k):
        scaled = ConfusionMatrix(*(c * k for c in cm.cells))
        for m in ONE_GROUP:
            base, big = evaluate(m, cm), evaluate(m, scaled)
            assert base.defined == big.defined, m
            if base.defined:
                assert big.score == pytest.approx(base.score, rel=1e-9), m

    @given(cm=nonempty_matrices)
    @settings(max_examples=300)
    def test_score_ranges(self, cm):
        for m in ONE_GROUP:
            r = evaluate(m, cm)
            if not r.defined:
                continue
            if m is MetricId.MCC:
                assert -1 - 1e-12 <= r.score <= 1 + 1e-12
            elif m is MetricId.MARGINAL_BENEFIT:
                assert -1 <= r.score <= 1
            elif m is not MetricId.PT:  # PT is unbounded off [0,1] at TPR < FPR
                assert 0 <= r.score <= 1

    @given(cm=nonempty_matrices)
    @settings(max_examples=200)
    def test_ofi_antisymmetry(self, cm):
        other = ConfusionMatrix(cm.tn, cm.fp, cm.fn, cm.tp)
        ab = evaluate_pair(MetricId.OFI, cm, other)
        ba = evaluate_pair(MetricId.OFI, other, cm)
        assert ab.score == pytest.approx(-ba.score, abs=1e-12)

    def test_ofi_self_is_zero(self):
        cm = ConfusionMatrix(2, 3, 4, 5)
        assert evaluate_pair(MetricId.OFI, cm, cm).score == 0.0


class TestArity:
    def test_evaluate_rejects_two_group(self):
        with pytest.raises(ValueError, match="two-group"):
            evaluate(MetricId.OFI, ConfusionMatrix(1, 1, 1, 1))

    def test_evaluate_pair_rejects_one_group(self):
        with pytest.raises(ValueError, match="one-group"):
            evaluate_pair(MetricId.ACC, ConfusionMatrix(1, 1, 1, 1), ConfusionMatrix(1, 1, 1, 1))


class TestBatch:
    def test_matches_scalar_over_full_enumeration(self):
        cells = enumerate_matrices_array(7)
        for m in ONE_GROUP:
            scores, defined = evaluate_batch(m, cells)
            for row, s, d in zip(cells, scores, defined):
                r = evaluate(m, ConfusionMatrix(*row))
                assert bool(d) == r.defined, (m, row)
                if r.defined:
                    assert s == pytest.approx(r.score, rel=1e-12), (m, row)
                else:
                    assert math.isnan(s)

    def test_shape_validation(self):
        with pytest.raises(ValueError, match="N, 4"):
            evaluate_batch(MetricId.ACC, np.zeros((3, 5)))
        with pytest.raises(ValueError, match="two-group"):
            evaluate_batch(MetricId.OFI, np.zeros((3, 4)))

    def test_zero_row_is_undefined(self):
        scores, defined = evaluate_batch(MetricId.ACC, np.zeros((1, 4)))
        assert not defined[0] and math.isnan(scores[0])

import itertools
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mpsqc.errors import DomainError
from mpsqc.metrics import (ConfusionCounts, UndefinedMetricWarning, accuracy, auc, build_report,
                           confusion, gini, sensitivity, specificity, taylor_stats)


def pair_auc(actual, scores):
    """AUC by enumerating every positive/negative pair, ties worth one half."""
    pos = [s for a, s in zip(actual, scores) if a == 1]
    neg = [s for a, s in zip(actual, scores) if a == 0]
    wins = sum(1.0 if p > n else 0.5 if p == n else 0.0 for p, n in itertools.product(pos, neg))
    return wins / (len(pos) * len(neg))


class TestConfusion:
    def test_all_right(self):
        assert confusion([1, 1, 0, 0], [1, 1, 0, 0]) == ConfusionCounts(tp=2, tn=2, fp=0, fn=0)

    def test_all_wrong(self):
        c = confusion([1, 0], [0, 1])
        assert (c.fn, c.fp, c.tp, c.tn) == (1, 1, 0, 0)

    def test_all_positive(self):
        c = confusion([1, 0, 0], [1, 1, 1])
        assert (c.tp, c.fp) == (1, 2)

    def test_length_mismatch(self):
        with pytest.raises(DomainError):
            confusion([1, 0], [1])

    def test_non_binary(self):
        with pytest.raises(DomainError):
            confusion([2, 0], [1, 0])

    def test_negative_counts(self):
        with pytest.raises(DomainError):
            ConfusionCounts(-1, 1, 1, 1)


class TestRates:
    def test_accuracy(self):
        assert accuracy(ConfusionCounts(tp=50, tn=30, fp=10, fn=10)) == 80.0
        assert accuracy(ConfusionCounts(3, 4, 0, 0)) == 100.0

    def test_sensitivity(self):
        assert sensitivity(ConfusionCounts(tp=4, tn=1, fp=3, fn=0)) == 1.0

    def test_specificity(self):
        assert specificity(ConfusionCounts(tp=1, tn=30, fp=10, fn=1)) == 0.75

    def test_undefined_sensitivity(self):
        with pytest.warns(UndefinedMetricWarning):
            assert math.isnan(sensitivity(ConfusionCounts(0, 5, 1, 0)))

    def test_undefined_specificity(self):
        with pytest.warns(UndefinedMetricWarning):
            assert math.isnan(specificity(ConfusionCounts(5, 0, 0, 1)))

    @settings(max_examples=300, deadline=None)
    @given(st.tuples(*[st.integers(0, 500)] * 4).filter(lambda t: t[0] + t[3] > 0 and t[1] + t[2] > 0))
    def test_formulas(self, counts):
        tp, tn, fp, fn = counts
        c = ConfusionCounts(tp, tn, fp, fn)
        assert accuracy(c) == 100.0 * (tp + tn) / (tp + tn + fp + fn)
        assert sensitivity(c) == tp / (tp + fn)
        assert specificity(c) == tn / (tn + fp)


class TestAuc:
    def test_perfect(self):
        assert gini([0, 0, 1, 1], [0.1, 0.2, 0.8, 0.9]) == 1.0

    def test_all_tied(self):
        assert gini([0, 1, 0, 1], [0.3] * 4) == 0.0

    def test_four_sample_example(self):
        actual, scores = [1, 0, 1, 0], [0.9, 0.1, 0.4, 0.6]
        assert pair_auc(actual, scores) == 0.75
        assert auc(actual, scores) == 0.75
        assert gini(actual, scores) == 0.5

    def test_reversed(self):
        assert gini([1, 1, 0], [0.1, 0.2, 0.9]) == -1.0

    def test_single_class(self):
        with pytest.warns(UndefinedMetricWarning):
            assert math.isnan(gini([1, 1], [0.2, 0.3]))

    @settings(max_examples=200, deadline=None)
    @given(seed=st.integers(0, 2**31), n=st.integers(2, 40))
    def test_matches_pair_enumeration(self, seed, n):
        rng = np.random.default_rng(seed)
        actual = rng.integers(0, 2, n)
        actual[0], actual[1] = 0, 1
        scores = rng.integers(0, 6, n) / 5.0  # coarse grid forces ties
        assert auc(actual, scores) == pytest.approx(pair_auc(actual, scores), abs=1e-12)

    @settings(max_examples=100, deadline=None)
    @given(seed=st.integers(0, 2**31))
    def test_invariant_under_monotone_map(self, seed):
        rng = np.random.default_rng(seed)
        actual = np.r_[0, 1, rng.integers(0, 2, 20)]
        scores = rng.uniform(0, 1, 22)
        assert gini(actual, scores) == pytest.approx(gini(actual, np.exp(3 * scores) - 7), abs=1e-12)


class TestTaylor:
    def test_identical(self, rng):
        a = rng.normal(size=30)
        t = taylor_stats(a, a)
        assert t.r == pytest.approx(1) and t.crmsd == 0 and t.std_actual == t.std_pred

    def test_reflection(self, rng):
        a = rng.normal(size=30)
        t = taylor_stats(a, -(a - a.mean()) + a.mean())
        assert t.r == pytest.approx(-1)
        assert t.crmsd == pytest.approx(t.std_actual + t.std_pred)

    def test_random_identity(self, rng):
        a, p = rng.normal(size=100), rng.normal(size=100)
        t = taylor_stats(a, p)
        # direct recomputation with population moments
        sa, sp = np.std(a), np.std(p)
        r = np.corrcoef(a, p)[0, 1]
        crmsd = np.sqrt(np.mean(((a - a.mean()) - (p - p.mean())) ** 2))
        assert t.std_actual == pytest.approx(sa, abs=1e-12)
        assert t.std_pred == pytest.approx(sp, abs=1e-12)
        assert t.r == pytest.approx(r, abs=1e-12)
        assert t.crmsd == pytest.approx(crmsd, abs=1e-12)
        assert t.identity_residual() < 1e-9

    def test_constant_series(self):
        with pytest.warns(UndefinedMetricWarning):
            t = taylor_stats([0, 1, 0, 1], [0.5] * 4)
        assert math.isnan(t.r) and t.identity_residual() < 1e-15

    def test_too_short(self):
        with pytest.raises(DomainError):
            taylor_stats([1.0], [1.0])


class TestReport:
    def test_perfect_model(self):
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            rep = build_report([0, 1, 1, 0], [0.0, 1.0, 1.0, 0.0])
        assert rep.acc == 100.0 and rep.cost == 0.0
        assert rep.taylor.crmsd == 0.0 and rep.taylor.r == pytest.approx(1)
        assert rep.gini == 1.0

    def test_keys_and_rows(self):
        rep = build_report([0, 1, 1, 0, 1], [0.2, 0.7, 0.4, 0.5, 0.9])
        d = rep.to_dict()
        assert {"acc", "cost", "sens", "spec", "gini", "taylor"} <= set(d)
        assert set(d["taylor"]) >= {"std_actual", "std_pred", "r", "crmsd"}
        assert len(rep.samples_csv().strip().splitlines()) == 1 + 5
        assert d["counts"] == {"tp": 2, "tn": 1, "fp": 1, "fn": 1}

    def test_threshold_inclusive(self):
        assert build_report([1], [0.5]).counts.tp == 1

    def test_single_class_split_flags_undefined(self):
        rep = build_report([1, 1, 1], [0.6, 0.7, 0.2])
        d = rep.to_dict()
        assert d["spec"] is None and d["gini"] is None
        assert set(rep.undefined) == {"spec", "gini", "taylor_r"}

from __future__ import annotations

import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from elfarol.analysis.stats import betainc, t_two_sided_p, t_survival, welch_t_test
from elfarol.errors import DegenerateSampleError


def t_density(u: float, df: float) -> float:
    log_c = math.lgamma((df + 1) / 2) - math.lgamma(df / 2) - 0.5 * math.log(df * math.pi)
    return math.exp(log_c - (df + 1) / 2 * math.log1p(u * u / df))


def p_by_quadrature(t: float, df: float) -> float:
    tail, _ = integrate.quad(t_density, abs(t), math.inf, args=(df,), epsabs=1e-13, epsrel=1e-12, limit=200)
    return 2 * tail


def exact_welch(a, b):
    """t^2 and df as exact rationals."""
    fa, fb = [Fraction(x) for x in a], [Fraction(x) for x in b]

    def mv(xs):
        m = sum(xs) / len(xs)
        return m, sum((x - m) ** 2 for x in xs) / (len(xs) - 1)

    ma, va = mv(fa)
    mb, vb = mv(fb)
    qa, qb = va / len(fa), vb / len(fb)
    t2 = (ma - mb) ** 2 / (qa + qb)
    df = (qa + qb) ** 2 / (qa**2 / (len(fa) - 1) + qb**2 / (len(fb) - 1))
    return ma - mb, t2, df


samples = st.lists(st.integers(0, 200), min_size=2, max_size=30).filter(lambda xs: len(set(xs)) > 1)


class TestWelch:
    def test_worked_example(self):
        a = [19, 22, 16, 29, 24]
        b = [20, 11, 17, 12]
        r = welch_t_test(a, b)
        diff, t2, df = exact_welch(a, b)
        assert r.t == pytest.approx(math.copysign(math.sqrt(float(t2)), diff), rel=1e-12)
        assert r.df == pytest.approx(float(df), rel=1e-12)
        assert r.p == pytest.approx(p_by_quadrature(r.t, r.df), abs=1e-6)

    @settings(max_examples=60, deadline=None)
    @given(samples, samples)
    def test_statistic_matches_rational_closed_form(self, a, b):
        r = welch_t_test(a, b)
        diff, t2, df = exact_welch(a, b)
        assert r.t * r.t == pytest.approx(float(t2), rel=1e-9, abs=1e-12)
        assert (r.t > 0) == (diff > 0) or diff == 0
        assert r.df == pytest.approx(float(df), rel=1e-9)

    @settings(max_examples=60, deadline=None)
    @given(samples, samples)
    def test_p_matches_quadrature(self, a, b):
        r = welch_t_test(a, b)
        assert r.p == pytest.approx(p_by_quadrature(r.t, r.df), abs=1e-6)

    @settings(max_examples=40, deadline=None)
    @given(samples, samples)
    def test_agrees_with_scipy(self, a, b):
        r = welch_t_test(a, b)
        ref = stats.ttest_ind(a, b, equal_var=False)
        assert r.t == pytest.approx(ref.statistic, rel=1e-9, abs=1e-12)
        assert r.p == pytest.approx(ref.pvalue, abs=1e-9)

    @settings(max_examples=40, deadline=None)
    @given(samples, samples)
    def test_antisymmetric(self, a, b):
        ab, ba = welch_t_test(a, b), welch_t_test(b, a)
        assert ab.t == pytest.approx(-ba.t, rel=1e-12, abs=1e-15)
        assert ab.df == pytest.approx(ba.df, rel=1e-12)
        assert ab.p == pytest.approx(ba.p, rel=1e-12, abs=1e-15)

    def test_identical_samples(self):
        r = welch_t_test([1, 2, 3, 4], [1, 2, 3, 4])
        assert r.t == 0 and r.p == pytest.approx(1.0, abs=1e-15)

    def test_equal_variance_equal_n_reduces_to_pooled(self):
        a = [3.0, 5.0, 7.0, 9.0]
        b = [10.0, 12.0, 14.0, 16.0]
        r = welch_t_test(a, b)
        n = len(a)
        sp2 = (sum((x - 6) ** 2 for x in a) + sum((x - 13) ** 2 for x in b)) / (2 * n - 2)
        t_pooled = (6 - 13) / math.sqrt(sp2 * 2 / n)
        assert r.t == pytest.approx(t_pooled, abs=1e-12)
        assert r.df == pytest.approx(2 * n - 2, abs=1e-12)

    @pytest.mark.parametrize("a,b", [([1], [1, 2]), ([1, 2], []), ([4, 4, 4], [7, 7])])
    def test_degenerate(self, a, b):
        with pytest.raises(DegenerateSampleError):
            welch_t_test(a, b)

    def test_one_constant_group_still_defined(self):
        r = welch_t_test([5, 5, 5], [1, 2, 3])
        assert r.df == pytest.approx(2.0) and 0 < r.p < 1


class TestTailFunction:
    @pytest.mark.parametrize("t", [0.0, 0.3, 1.0, 2.5, 6.0, 25.0])
    @pytest.mark.parametrize("df", [1.0, 2.7, 10.0, 48.3, 500.0])
    def test_p_against_quadrature(self, t, df):
        assert t_two_sided_p(t, df) == pytest.approx(p_by_quadrature(t, df), abs=1e-6)

    def test_cauchy_closed_form(self):
        # df = 1 is the Cauchy distribution
        for t in (0.5, 1.0, 3.0):
            assert t_two_sided_p(t, 1.0) == pytest.approx(1 - 2 * math.atan(t) / math.pi, abs=1e-13)

    def test_survival_symmetry(self):
        assert t_survival(1.3, 7.0) + t_survival(-1.3, 7.0) == pytest.approx(1.0, abs=1e-14)

    @settings(max_examples=100, deadline=None)
    @given(st.floats(0.1, 50), st.floats(0.1, 50), st.floats(0, 1))
    def test_betainc_against_scipy(self, a, b, x):
        assert betainc(a, b, x) == pytest.approx(float(stats.beta.cdf(x, a, b)), abs=1e-10)

    def test_betainc_domain(self):
        with pytest.raises(ValueError):
            betainc(0, 1, 0.5)

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rigkit import core, wmle
from rigkit.core import RigParams
from rigkit.exceptions import DomainError, SpreadUnidentifiableError
from rigkit.wmle import WeightedSample


@pytest.fixture(scope="module")
def sample_1k():
    x = core.sample(RigParams(1.5, 0.7), 1000, seed=21)
    w = np.random.default_rng(22).uniform(0.2, 3.0, size=x.size)
    return WeightedSample(x, w)


class TestWeightedSample:
    def test_defaults_to_unit_weights(self):
        s = WeightedSample([1.0, 2.0, 3.0])
        assert np.array_equal(s.w, np.ones(3))
        assert s.total_weight == 3.0

    @pytest.mark.parametrize(
        "x,w",
        [([1.0, -1.0], None), ([1.0, 0.0], None), ([1.0, 2.0], [1.0, -0.5]), ([1.0, 2.0], [0.0, 0.0]), ([1.0], [1.0, 2.0]), ([], None)],
    )
    def test_rejects_invalid(self, x, w):
        with pytest.raises(DomainError):
            WeightedSample(x, w)

    def test_read_only(self):
        s = WeightedSample([1.0, 2.0])
        with pytest.raises(ValueError):
            s.x[0] = 5.0


class TestLoglik:
    def test_naive_sum(self, sample_1k):
        p = RigParams(1.2, 0.9)
        naive = 0.0
        for xi, wi in zip(sample_1k.x, sample_1k.w):
            m2 = p.theta * (3 * p.gamma + p.theta)
            naive += wi * (
                0.5 * math.log(m2 / (2 * math.pi * p.gamma * xi**3)) - (xi - math.sqrt(m2)) ** 2 / (2 * p.gamma * xi)
            )
        assert wmle.weighted_loglik(sample_1k, p) == pytest.approx(naive, rel=1e-10)

    def test_unit_weights_is_plain_loglik(self):
        x = core.sample(RigParams(1.0, 1.0), 50, seed=1)
        p = RigParams(0.8, 1.3)
        assert wmle.weighted_loglik(WeightedSample(x), p) == pytest.approx(np.sum(core.log_pdf(x, p)), rel=1e-14)

    def test_duplicate_equals_double_weight(self):
        x = np.array([0.5, 1.0, 2.5])
        p = RigParams(1.0, 0.6)
        a = wmle.weighted_loglik(WeightedSample(np.append(x, 2.5)), p)
        b = wmle.weighted_loglik(WeightedSample(x, [1.0, 1.0, 2.0]), p)
        assert a == pytest.approx(b, rel=1e-14)

    def test_score_and_hessian_vs_finite_differences(self, sample_1k):
        p = RigParams(1.3, 0.8)
        f = lambda t, g: wmle.weighted_loglik(sample_1k, RigParams(t, g))
        h = 1e-6
        fd = np.array(
            [
                (f(p.theta + h, p.gamma) - f(p.theta - h, p.gamma)) / (2 * h),
                (f(p.theta, p.gamma + h) - f(p.theta, p.gamma - h)) / (2 * h),
            ]
        )
        np.testing.assert_allclose(wmle.weighted_score(sample_1k, p).as_array(), fd, rtol=1e-5)
        s = lambda t, g: wmle.weighted_score(sample_1k, RigParams(t, g)).as_array()
        fdh = np.column_stack(
            [
                (s(p.theta + h, p.gamma) - s(p.theta - h, p.gamma)) / (2 * h),
                (s(p.theta, p.gamma + h) - s(p.theta, p.gamma - h)) / (2 * h),
            ]
        )
        np.testing.assert_allclose(wmle.weighted_hessian(sample_1k, p).as_matrix(), fdh, rtol=1e-5)


class TestFit:
    def test_optimality(self, sample_1k):
        fit = wmle.fit(sample_1k)
        assert fit.converged
        assert np.linalg.norm(wmle.weighted_score(sample_1k, fit.params).as_array()) < 1e-6
        H = wmle.weighted_hessian(sample_1k, fit.params).as_matrix()
        assert np.all(np.linalg.eigvalsh(H) < 0)
        assert fit.loglik == wmle.weighted_loglik(sample_1k, fit.params)

    def test_matches_closed_form(self, sample_1k):
        a = wmle.fit(sample_1k).params
        b = wmle.closed_form_mle(sample_1k)
        assert a.theta == pytest.approx(b.theta, rel=1e-9)
        assert a.gamma == pytest.approx(b.gamma, rel=1e-9)

    def test_recovery_large_sample(self):
        truth = RigParams(1.0, 1.0)
        fit = wmle.fit(WeightedSample(core.sample(truth, 10**5, seed=31)))
        assert abs(fit.params.theta - truth.theta) < 3 * fit.se_theta
        assert abs(fit.params.gamma - truth.gamma) < 3 * fit.se_gamma
        s = WeightedSample(core.sample(truth, 10**5, seed=31))
        assert np.linalg.norm(wmle.weighted_score(s, fit.params).as_array()) < 1e-6

    def test_standard_errors_match_monte_carlo_spread(self):
        truth = RigParams(2.0, 0.5)
        est = np.array([wmle.fit_closed_form(core.sample(truth, 400, seed=s)).params.theta for s in range(200)])
        se = wmle.fit(core.sample(truth, 400, seed=999)).se_theta
        assert se == pytest.approx(est.std(ddof=1), rel=0.2)

    @pytest.mark.parametrize("c", [1e-3, 0.5, 7.0, 1e4])
    def test_weight_scaling_invariance(self, sample_1k, c):
        base = wmle.fit(sample_1k)
        scaled = wmle.fit(WeightedSample(sample_1k.x, c * sample_1k.w))
        assert scaled.params.theta == pytest.approx(base.params.theta, rel=1e-8)
        assert scaled.params.gamma == pytest.approx(base.params.gamma, rel=1e-8)
        assert scaled.loglik == pytest.approx(c * base.loglik, rel=1e-10)

    def test_start_independence(self, sample_1k):
        a = wmle.fit(sample_1k)
        m = wmle.moment_start(sample_1k)
        b = wmle.fit(sample_1k, x0=RigParams(3.0 * m.theta, 0.2 * m.gamma))
        assert b.params.theta == pytest.approx(a.params.theta, rel=1e-6)
        assert b.params.gamma == pytest.approx(a.params.gamma, rel=1e-6)

    def test_zero_weights_drop_points(self):
        x = core.sample(RigParams(1.0, 0.5), 300, seed=3)
        w = np.ones_like(x)
        w[:100] = 0.0
        a = wmle.fit(WeightedSample(x, w)).params
        b = wmle.fit(WeightedSample(x[100:])).params
        assert a.theta == pytest.approx(b.theta, rel=1e-9)
        assert a.gamma == pytest.approx(b.gamma, rel=1e-9)

    def test_all_equal_is_unidentifiable(self):
        with pytest.raises(SpreadUnidentifiableError, match="spread unidentifiable"):
            wmle.fit([2.0, 2.0, 2.0])
        with pytest.raises(SpreadUnidentifiableError):
            wmle.fit(WeightedSample([2.0, 2.0, 5.0], [1.0, 1.0, 0.0]))

    def test_error_shrinks_with_n(self):
        truth = RigParams(1.0, 1.0)
        medians = []
        for n in (10**2, 10**3, 10**4, 10**5):
            errs = []
            for rep in range(20):
                p = wmle.fit(core.sample(truth, n, seed=1000 * rep + 7)).params
                errs.append(abs(p.theta - 1.0) + abs(p.gamma - 1.0))
            medians.append(np.median(errs))
        assert np.all(np.diff(medians) < 0)

    @settings(max_examples=25, deadline=None)
    @given(
        st.floats(min_value=0.05, max_value=20.0),
        st.floats(min_value=0.05, max_value=20.0),
        st.integers(min_value=0, max_value=10**6),
    )
    def test_bfgs_agrees_with_closed_form(self, theta, gamma, seed):
        x = core.sample(RigParams(theta, gamma), 200, seed=seed)
        w = np.random.default_rng(seed).uniform(0.1, 2.0, size=x.size)
        s = WeightedSample(x, w)
        a = wmle.fit(s).params
        b = wmle.closed_form_mle(s)
        assert a.theta == pytest.approx(b.theta, rel=1e-7)
        assert a.gamma == pytest.approx(b.gamma, rel=1e-7)

import math

import numpy as np
import pytest

from micglm.reparam import (ReparamPoint, SingularityAtZeroError,
                            beta_of_gamma, dbeta_dgamma, gamma_of_beta,
                            penalty_d2beta, penalty_dbeta, reparam_point)


def bisect_gamma(beta, a, tol=1e-14):
    """Independent oracle: plain bisection for the inverse map."""
    if beta == 0.0:
        return 0.0
    sign = 1.0 if beta > 0 else -1.0
    target = abs(beta)
    lo, hi = 0.0, 1.01 * target + 1.0
    while hi * math.tanh(a * hi * hi) < target:
        hi *= 2.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid * math.tanh(a * mid * mid) < target:
            lo = mid
        else:
            hi = mid
    return sign * 0.5 * (lo + hi)


class TestForwardMap:
    def test_zero(self):
        assert beta_of_gamma(0.0, 10.0) == 0.0

    def test_frozen_values(self):
        assert beta_of_gamma(1.0, 10.0) == pytest.approx(
            0.9999999958776927, abs=1e-15)
        assert beta_of_gamma(0.3, 10.0) == pytest.approx(
            0.21488936105970732, abs=1e-15)

    def test_odd_and_strictly_increasing(self):
        g = np.linspace(-4, 4, 801)
        b = beta_of_gamma(g, 10.0)
        assert np.allclose(b, -beta_of_gamma(-g, 10.0))
        assert np.all(np.diff(b) > 0)

    def test_shrinkage_only_near_zero(self):
        for a in (10.0, 25.0, 50.0):
            for g in (1.0, -1.2, 2.0, 5.0):
                assert abs(beta_of_gamma(g, a) - g) < 1e-8

    def test_magnitude_never_exceeds_gamma(self):
        g = np.linspace(-3, 3, 301)
        assert np.all(np.abs(beta_of_gamma(g, 10.0)) <= np.abs(g))


class TestInverseMap:
    def test_zero_maps_to_zero_exactly(self):
        assert gamma_of_beta(0.0, 10.0) == 0.0

    def test_against_bisection_oracle(self):
        for beta in (2.0, -0.7, 0.05, 1e-3, 37.5):
            oracle = bisect_gamma(beta, 10.0)
            assert gamma_of_beta(beta, 10.0) == pytest.approx(
                oracle, abs=1e-12)

    def test_beta_two_is_nearly_two(self):
        # tanh saturates: the root differs from 2 by O(exp(-80))
        assert gamma_of_beta(2.0, 10.0) == pytest.approx(2.0, abs=1e-12)

    def test_round_trip_small_value(self):
        beta = beta_of_gamma(0.05, 10.0)
        assert gamma_of_beta(beta, 10.0) == pytest.approx(0.05, abs=1e-10)

    def test_round_trip_thousand_random_gammas(self):
        rng = np.random.default_rng(99)
        g = rng.uniform(-5.0, 5.0, 1000)
        for a in (10.0, 30.0):
            back = gamma_of_beta(beta_of_gamma(g, a), a)
            assert np.max(np.abs(back - g)) < 1e-10

    def test_vectorized(self):
        b = np.array([0.0, 0.5, -1.0])
        g = gamma_of_beta(b, 10.0)
        assert g.shape == (3,)
        assert g[0] == 0.0 and g[2] < 0


class TestChainRuleDerivatives:
    def test_dbeta_dgamma_matches_finite_differences(self):
        rng = np.random.default_rng(3)
        for g in rng.uniform(-3.0, 3.0, 100):
            h = 1e-6 * max(1.0, abs(g))
            fd = (beta_of_gamma(g + h, 10.0)
                  - beta_of_gamma(g - h, 10.0)) / (2 * h)
            assert abs(dbeta_dgamma(g, 10.0) - fd) / max(abs(fd), 1e-3) < 1e-7

    def test_dbeta_dgamma_nonnegative_zero_only_at_origin(self):
        g = np.linspace(-3, 3, 601)
        d = dbeta_dgamma(g, 10.0)
        assert np.all(d >= 0.0)
        assert dbeta_dgamma(0.0, 10.0) == 0.0
        assert np.all(d[g != 0.0] > 0.0)

    def test_penalty_dbeta_frozen_value(self):
        assert penalty_dbeta(0.3, 10.0) == pytest.approx(
            1.8342525697970977, abs=1e-12)

    def test_penalty_dbeta_vanishes_far_out(self):
        assert abs(penalty_dbeta(3.0, 10.0)) < 1e-12

    def test_penalty_dbeta_antisymmetric(self):
        assert penalty_dbeta(-0.3, 10.0) == -penalty_dbeta(0.3, 10.0)

    def test_penalty_dbeta_matches_numeric_derivative_along_beta(self):
        # oracle: differentiate w(gamma(beta)) in beta by chained finite
        # differences through the numeric inverse
        a = 10.0
        for g0 in (0.15, 0.3, 0.8, -0.5):
            b0 = beta_of_gamma(g0, a)
            h = 1e-7 * max(1.0, abs(b0))
            w = lambda b: math.tanh(a * gamma_of_beta(b, a) ** 2)
            fd = (w(b0 + h) - w(b0 - h)) / (2 * h)
            assert abs(penalty_dbeta(g0, a) - fd) / max(abs(fd), 1e-3) < 1e-6

    def test_penalty_d2beta_matches_numeric_second_derivative(self):
        a = 10.0
        for g0 in (0.2, 0.4, -0.6):
            b0 = beta_of_gamma(g0, a)
            h = 2e-5 * max(1.0, abs(b0))
            w = lambda b: math.tanh(a * gamma_of_beta(b, a) ** 2)
            fd = (w(b0 + h) - 2 * w(b0) + w(b0 - h)) / h**2
            assert abs(penalty_d2beta(g0, a) - fd) / max(abs(fd), 1.0) < 1e-4

    def test_penalty_d2beta_blows_up_toward_origin(self):
        grid = [0.2, 0.1, 0.05, 0.02, 0.01]
        values = [abs(penalty_d2beta(g, 10.0)) for g in grid]
        assert all(b > a for a, b in zip(values, values[1:]))
        assert values[-1] > 1e3

    def test_singularity_errors_at_zero(self):
        with pytest.raises(SingularityAtZeroError):
            penalty_dbeta(0.0, 10.0)
        with pytest.raises(SingularityAtZeroError):
            penalty_d2beta(0.0, 10.0)


class TestReparamPoint:
    def test_fields_consistent(self):
        pt = reparam_point(0.3, 10.0)
        assert isinstance(pt, ReparamPoint)
        assert pt.beta == pytest.approx(pt.gamma * pt.w, abs=1e-15)
        assert pt.dbeta_dgamma == pytest.approx(pt.w + pt.gamma * pt.wdot)
        assert math.copysign(1.0, pt.beta) == math.copysign(1.0, pt.gamma)
        assert abs(pt.beta) <= abs(pt.gamma)

    def test_origin_point(self):
        pt = reparam_point(0.0, 10.0)
        assert pt.beta == 0.0 and pt.w == 0.0 and pt.dbeta_dgamma == 0.0

"""Tests for Wasserstein-2 transport and Gaussian smoothing."""

import math

import numpy as np
import pytest
from scipy.stats import norm

from genbound.errors import ConfigError, EnumerationLimitError, QuadratureError
from genbound.transport import (
    PointCloudDistribution,
    gaussian_kl_1d,
    gaussian_quantile_cloud,
    gaussian_smooth,
    point_mass,
    smoothed_kl,
    smoothed_kl_mc,
    smoothed_tv,
    verify_lemma10,
    w2_exact,
    w2_gaussian,
    w2_permutation_oracle,
    w2_sorted_1d,
)


def cloud(points, weights=None):
    points = np.asarray(points, dtype=float)
    if weights is None:
        weights = np.full(len(points), 1.0 / len(points))
    return PointCloudDistribution(points=points, weights=weights)


class TestWasserstein:
    def test_point_masses(self):
        cost, plan = w2_exact(point_mass(0.0), point_mass(1.0))
        assert cost == pytest.approx(1.0)
        np.testing.assert_allclose(plan.matrix, [[1.0]])

    def test_plan_has_the_marginals(self):
        Q = cloud([0.0, 1.0, 3.0], [0.2, 0.5, 0.3])
        Qp = cloud([0.5, 2.0], [0.6, 0.4])
        _, plan = w2_exact(Q, Qp)
        np.testing.assert_allclose(plan.matrix.sum(axis=1), Q.weights, atol=1e-12)
        np.testing.assert_allclose(plan.matrix.sum(axis=0), Qp.weights, atol=1e-12)

    def test_matches_permutation_oracle(self):
        rng = np.random.default_rng(11)
        for size in (2, 4, 6):
            Q = cloud(rng.normal(size=(size, 2)))
            Qp = cloud(rng.normal(size=(size, 2)))
            assert w2_exact(Q, Qp)[0] == pytest.approx(w2_permutation_oracle(Q, Qp), abs=1e-9)

    def test_monotone_coupling_on_the_line(self):
        rng = np.random.default_rng(5)
        for _ in range(5):
            Q = cloud(rng.normal(size=4), rng.dirichlet(np.ones(4)))
            Qp = cloud(rng.normal(size=3), rng.dirichlet(np.ones(3)))
            assert w2_sorted_1d(Q, Qp) == pytest.approx(w2_exact(Q, Qp)[0], abs=1e-9)

    def test_gaussian_closed_form(self):
        assert w2_gaussian(0.0, 1.0, 1.0, 2.0) == pytest.approx(2.0)
        with pytest.raises(ConfigError):
            w2_gaussian(0.0, 0.0, 1.0, 1.0)

    def test_quantile_cloud_matches_moments(self):
        Q = gaussian_quantile_cloud(1.5, 2.0, 64)
        assert Q.mean()[0] == pytest.approx(1.5)
        assert Q.weights @ (Q.points[:, 0] - 1.5) ** 2 == pytest.approx(4.0)

    def test_support_guard(self):
        big = cloud(np.arange(65.0))
        with pytest.raises(EnumerationLimitError):
            w2_exact(big, point_mass(0.0))

    def test_oracle_guard(self):
        with pytest.raises(EnumerationLimitError):
            w2_permutation_oracle(cloud(np.arange(7.0)), cloud(np.arange(7.0)))


class TestSmoothing:
    def test_density_integrates_to_one(self):
        density = gaussian_smooth(cloud([0.0, 2.0], [0.3, 0.7]), 0.5)
        assert density.integral() == pytest.approx(1.0, abs=1e-9)
        assert density.mean()[0] == pytest.approx(1.4)

    def test_kl_of_point_masses(self):
        result = smoothed_kl(point_mass(0.0), point_mass(1.0), 0.5)
        assert result.converged
        assert result.value == pytest.approx(2.0, abs=1e-5)
        assert result.value == pytest.approx(gaussian_kl_1d(0.0, 0.25, 1.0, 0.25), abs=1e-5)

    def test_tv_of_point_masses(self):
        result = smoothed_tv(point_mass(0.0), point_mass(1.0), 0.5)
        assert result.value == pytest.approx(2 * (2 * norm.cdf(1.0) - 1), abs=1e-5)

    def test_tv_decreases_with_sigma(self):
        values = [smoothed_tv(point_mass(0.0), point_mass(1.0), s).value for s in (0.25, 0.5, 1.0, 2.0)]
        assert all(a > b for a, b in zip(values, values[1:]))

    def test_identical_clouds(self):
        Q = cloud([0.0, 1.0, 2.5], [0.2, 0.5, 0.3])
        assert smoothed_kl(Q, Q, 0.5).value == pytest.approx(0.0, abs=1e-12)
        assert smoothed_tv(Q, Q, 0.5).value == pytest.approx(0.0, abs=1e-12)

    def test_quadrature_is_one_dimensional(self):
        Q = cloud(np.zeros((2, 2)))
        with pytest.raises(QuadratureError):
            smoothed_kl(Q, Q, 0.5)

    def test_monte_carlo_agrees_with_quadrature(self):
        Q = cloud([0.0, 1.0, 2.0], [0.5, 0.3, 0.2])
        Qp = cloud([0.5, 1.5], [0.4, 0.6])
        quad = smoothed_kl(Q, Qp, 0.5).value
        mc = smoothed_kl_mc(Q, Qp, 0.5, np.random.default_rng(2), samples=40_000)
        assert abs(mc.value - quad) <= 5 * mc.stderr + 1e-6


class TestTransportInequality:
    @pytest.mark.parametrize("sigma", [0.25, 0.5, 1.0])
    def test_equality_for_point_masses(self, sigma):
        report = verify_lemma10(point_mass(0.0), point_mass(1.0), sigma)
        assert report.w2_squared == pytest.approx(1.0)
        assert report.slack == pytest.approx(0.0, abs=1e-5)

    def test_random_clouds(self):
        rng = np.random.default_rng(9)
        for _ in range(5):
            Q = cloud(rng.normal(size=4) * 1.5, rng.dirichlet(np.ones(4)))
            Qp = cloud(rng.normal(size=4) * 1.5, rng.dirichlet(np.ones(4)))
            report = verify_lemma10(Q, Qp, 0.5)
            assert report.slack >= -1e-6
            tv = smoothed_tv(Q, Qp, 0.5).value
            assert report.smoothed_kl >= 0.5 * tv**2 - 1e-6

    def test_gaussian_kl(self):
        assert gaussian_kl_1d(0.0, 1.0, 0.0, 1.0) == 0.0
        assert gaussian_kl_1d(1.0, 1.0, 0.0, 1.0) == pytest.approx(0.5)
        assert gaussian_kl_1d(0.0, 1.0, 0.0, math.e**2) == pytest.approx(0.5 * (2 + math.e**-2 - 1))

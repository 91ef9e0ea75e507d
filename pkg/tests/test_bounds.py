"""Tests for the bound calculators and their soundness on exact instances."""

import math

import numpy as np
import pytest

from genbound.bounds import (
    BoundReport,
    bound_divergence,
    bound_for,
    bound_mutual_information,
    bound_p_uniform,
    bound_pnorm,
    bound_single_letter,
    bound_smoothed,
    bound_theorem1,
    bound_wasserstein,
    eta_grid_bound,
    eta_grid,
    expected_smoothed_kl,
    expected_w2,
    pipeline_slacks,
    rate_factor,
)
from genbound.errors import ConfigError
from genbound.scenarios import BATTERY_DIVERGENCES


class TestFormulas:
    def test_theorem1(self):
        assert bound_theorem1(1.0, 1.0, 1.0, 4) == pytest.approx(1.0)
        assert bound_theorem1(0.0, 5.0, 1.0, 4) == 0.0
        assert math.isinf(bound_theorem1(math.inf, 1.0, 1.0, 4))

    def test_theorem1_rejects_bad_inputs(self):
        with pytest.raises(ConfigError):
            bound_theorem1(-1.0, 1.0, 1.0, 4)
        with pytest.raises(ConfigError):
            bound_theorem1(1.0, 1.0, 0.0, 4)

    def test_p_uniform_reduces_to_theorem1_at_two(self):
        assert bound_p_uniform(0.3, 0.7, 2.0, 5, 2.0) == pytest.approx(bound_theorem1(0.3, 0.7, 2.0, 5))

    def test_rate_factor(self):
        assert rate_factor(3, 8) == pytest.approx(0.5)
        assert rate_factor(2, 16) == pytest.approx(0.25)

    def test_eta_grid(self):
        grid = eta_grid()
        assert len(grid) == 26
        assert grid.max() == pytest.approx(0.05 * 2**12)
        np.testing.assert_allclose(grid, -grid[::-1])

    def test_eta_grid_bound(self):
        """At H = M = α = 1, n = 4 the best grid point is |η| = 1.6."""
        assert eta_grid_bound(1.0, 1.0, 1.0, 4) == pytest.approx(1.025)

    @pytest.mark.parametrize("H, M, n", [(0.1, 0.25, 2), (0.7, 0.25, 3), (2.0, 4.0, 8), (0.05, 1.0, 1)])
    def test_eta_grid_bound_close_to_optimum(self, H, M, n):
        exact = bound_theorem1(H, M, 1.0, n)
        grid = eta_grid_bound(H, M, 1.0, n)
        assert exact <= grid + 1e-12
        assert grid <= 1.07 * exact

    def test_report_status(self):
        report = BoundReport("s", 1, "kl", -0.5, 0.1, 0.25, 0.4)
        assert report.slack == pytest.approx(-0.1)
        assert not report.sound
        vacuous = BoundReport("s", 1, "kl", -0.5, math.inf, 0.25, math.inf)
        assert vacuous.vacuous and vacuous.sound


class TestSoundness:
    @pytest.mark.parametrize("fixture", ["gibbs2", "gibbs_skewed3", "erm2", "constant2", "cosine2"])
    def test_every_battery_divergence(self, request, fixture):
        inst = request.getfixturevalue(fixture)
        for name in BATTERY_DIVERGENCES:
            report = bound_for(inst, name)
            assert report.sound, report
            assert report.gen_true == pytest.approx(inst.gen)

    def test_constant_algorithm_has_zero_bound(self, constant2):
        for name in ("kl", "chi2", "pnormp:3"):
            assert bound_for(constant2, name).bound == pytest.approx(0.0, abs=1e-12)

    def test_itakura_saito_vacuous_on_deterministic_erm(self, erm2):
        assert bound_divergence(erm2, "itakura-saito").vacuous
        chi2 = bound_divergence(erm2, "chi2")
        assert not chi2.vacuous and chi2.sound
        assert math.isfinite(bound_mutual_information(erm2).bound)

    def test_hellinger_ratio_cap(self, erm2):
        """ERM point masses have density ratio 2, above a cap of 1.5."""
        report = bound_divergence(erm2, "hellinger:1.5")
        assert report.vacuous
        assert report.diagnostics["max_ratio"] == pytest.approx(2.0)

    @pytest.mark.parametrize("name", ["kl", "chi2", "pnorm2:1.5"])
    def test_pipeline_slacks(self, gibbs_skewed3, name):
        assert np.all(pipeline_slacks(gibbs_skewed3, name) >= -1e-12)

    def test_pipeline_needs_strong_convexity(self, gibbs2):
        with pytest.raises(ConfigError):
            pipeline_slacks(gibbs2, "pnormp:3")


class TestInstantiations:
    def test_pnorm_regimes(self, gibbs2):
        a = bound_pnorm(gibbs2, 1.5)
        b = bound_pnorm(gibbs2, 3.0)
        assert a.divergence == "pnorm2:1.5"
        assert b.divergence == "pnormp:3"
        assert b.diagnostics["rate_factor"] == pytest.approx(2 ** (-1 / 3))
        assert a.sound and b.sound

    @pytest.mark.parametrize("p, regime", [(1.0, None), (3.0, "a"), (1.5, "b"), (2.0, "c")])
    def test_pnorm_rejects(self, gibbs2, p, regime):
        with pytest.raises(ConfigError):
            bound_pnorm(gibbs2, p, regime)

    def test_single_letter_tighter_than_mutual_information(self, gibbs_skewed3):
        single = bound_single_letter(gibbs_skewed3, "kl")
        full = bound_mutual_information(gibbs_skewed3)
        assert single.bound <= full.bound + 1e-12
        assert single.sound
        assert single.divergence == "single-letter:kl"

    def test_single_letter_dispatch(self, gibbs2):
        assert bound_for(gibbs2, "single-letter:chi2").divergence == "single-letter:chi2"
        with pytest.raises(ConfigError):
            bound_single_letter(gibbs2, "pnormp:3")

    def test_transport_needs_embedding(self, gibbs2):
        with pytest.raises(ConfigError):
            bound_wasserstein(gibbs2)

    def test_smoothed_kl_below_transport_cost(self, cosine2):
        """E D_σ ≤ E W2²/(2σ²)."""
        for sigma in (0.25, 0.5):
            value, converged, _ = expected_smoothed_kl(cosine2, sigma)
            assert converged
            assert value <= expected_w2(cosine2) / (2 * sigma**2) + 1e-6

    def test_wasserstein_dominates_smoothed(self, cosine2):
        smoothed = bound_smoothed(cosine2, 0.5)
        transport = bound_wasserstein(cosine2)
        assert smoothed.sound and transport.sound
        assert smoothed.bound <= transport.bound + 1e-6
        assert transport.diagnostics["sigma"] == pytest.approx(0.5)

    def test_smoothed_dispatch(self, cosine2):
        assert bound_for(cosine2, "smoothed-kl:0.5").divergence == "smoothed-kl:0.5"
